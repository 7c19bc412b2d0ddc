"""Finite Serre graphs, combinatorial morphisms and counting invariants.

A graph is stored by its darts (half-edges).  Every geometric edge ``e``
contributes the dart ``e`` (from its source to its target) and the reversed
dart ``e'``.  Loops and parallel edges need no special casing.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DisconnectedGraphError, GraphError

LETTER_RE = re.compile(r"[a-z][0-9]*\Z")
SIGNED_LETTER_RE = re.compile(r"[a-zA-Z][0-9]*\Z")


def reverse_dart(dart: str) -> str:
    return dart[:-1] if dart.endswith("'") else dart + "'"


def edge_of(dart: str) -> str:
    return dart[:-1] if dart.endswith("'") else dart


def is_forward(dart: str) -> bool:
    return not dart.endswith("'")


def invert_letter(letter: str) -> str:
    """``a`` <-> ``A``, ``b2`` <-> ``B2``."""
    head = letter[0]
    return (head.upper() if head.islower() else head.lower()) + letter[1:]


@dataclass(frozen=True, eq=False)
class Graph:
    vertices: tuple
    darts: tuple
    involution: Mapping[str, str]
    origin: Mapping[str, str]
    label: Optional[Mapping[str, str]] = None
    name: str = ""

    @cached_property
    def _darts_at(self) -> dict:
        at = {v: [] for v in self.vertices}
        for d in self.darts:
            at[self.origin[d]].append(d)
        return {v: tuple(ds) for v, ds in at.items()}

    def darts_at(self, v: str) -> tuple:
        return self._darts_at[v]

    def degree(self, v: str) -> int:
        return len(self._darts_at[v])

    def terminus(self, d: str) -> str:
        return self.origin[self.involution[d]]

    @property
    def labeled(self) -> bool:
        return self.label is not None

    @property
    def num_edges(self) -> int:
        return len(self.darts) // 2

    def edges(self) -> list:
        """``(edge_id, src, dst, label)`` for every geometric edge, in id order."""
        out = []
        for d in self.darts:
            if is_forward(d):
                lab = self.label[d] if self.label is not None else None
                out.append((d, self.origin[d], self.terminus(d), lab))
        return out

    def _key(self):
        lab = tuple(sorted(self.label.items())) if self.label is not None else None
        return (self.vertices, tuple(self.edges()), lab)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Graph({self.name!r}, |V|={len(self.vertices)}, |E|={self.num_edges})"

    def dart_with_label(self, v: str, letter: str) -> Optional[str]:
        """The unique dart at ``v`` labelled ``letter`` (None if absent)."""
        found = None
        for d in self._darts_at[v]:
            if self.label[d] == letter:
                if found is not None:
                    raise GraphError(f"vertex {v} has two darts labelled {letter}")
                found = d
        return found

    def renamed(self, name: str) -> "Graph":
        return Graph(self.vertices, self.darts, self.involution, self.origin, self.label, name)


def build_graph(
    vertices: Iterable[str],
    edges: Iterable[Sequence],
    name: str = "",
    alphabet: Optional[Iterable[str]] = None,
) -> Graph:
    """Build a graph from vertex ids and ``(id, src, dst[, label])`` edges.

    Labels are lowercase letters optionally followed by digits.  Either all
    edges carry a label or none does.  When ``alphabet`` is given every label
    must belong to it.
    """
    vlist = [str(v) for v in vertices]
    vset = set(vlist)
    if len(vset) != len(vlist):
        dup = sorted(v for v in vset if vlist.count(v) > 1)
        raise GraphError(f"duplicate vertex identifiers: {', '.join(dup)}")
    allowed = set(alphabet) if alphabet is not None else None

    involution, origin, label = {}, {}, {}
    seen = set()
    n_labeled = 0
    n_edges = 0
    for spec in edges:
        if len(spec) not in (3, 4):
            raise GraphError(f"edge description must have 3 or 4 fields: {spec!r}")
        eid, src, dst = (str(x) for x in spec[:3])
        lab = spec[3] if len(spec) == 4 else None
        n_edges += 1
        if not eid or eid.endswith("'") or any(c.isspace() for c in eid):
            raise GraphError(f"bad edge identifier {eid!r}")
        if eid in seen:
            raise GraphError(f"duplicate edge identifier {eid}")
        seen.add(eid)
        for end in (src, dst):
            if end not in vset:
                raise GraphError(f"edge {eid} has dangling endpoint {end}")
        rev = eid + "'"
        involution[eid], involution[rev] = rev, eid
        origin[eid], origin[rev] = src, dst
        if lab is not None:
            if not LETTER_RE.match(lab):
                raise GraphError(f"edge {eid}: label {lab!r} is not a lowercase letter")
            if allowed is not None and lab not in allowed:
                raise GraphError(f"edge {eid}: label {lab!r} outside the alphabet")
            label[eid], label[rev] = lab, invert_letter(lab)
            n_labeled += 1
    if n_labeled not in (0, n_edges):
        raise GraphError("either every edge or no edge must carry a label")
    darts = tuple(sorted(involution))
    return Graph(
        vertices=tuple(sorted(vset)),
        darts=darts,
        involution=involution,
        origin=origin,
        label=label if n_labeled else None,
        name=name,
    )


def rose(letters: Sequence[str], name: str = "rose") -> Graph:
    """One vertex with a labelled loop per letter."""
    return build_graph(["o"], [(x, "o", "o", x) for x in letters], name=name)


def euler_characteristic(g: Graph) -> int:
    return len(g.vertices) - g.num_edges


def connected_components(g: Graph) -> list:
    """Vertex tuples of the components, ordered by least vertex id."""
    seen = set()
    comps = []
    for v in g.vertices:
        if v in seen:
            continue
        comp = []
        queue = deque([v])
        seen.add(v)
        while queue:
            u = queue.popleft()
            comp.append(u)
            for d in g.darts_at(u):
                w = g.terminus(d)
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def is_connected(g: Graph) -> bool:
    return len(g.vertices) > 0 and len(connected_components(g)) == 1


def require_connected(g: Graph) -> None:
    if not is_connected(g):
        raise DisconnectedGraphError(f"graph {g.name or '<anonymous>'} is not connected")


def free_rank(g: Graph) -> int:
    """Rank of the free fundamental group of a connected graph."""
    require_connected(g)
    return 1 - euler_characteristic(g)


def average_degree_after_folds(g: Graph, f: int) -> Fraction:
    """Average vertex degree after ``f`` vertex-identifying folds.

    Each such fold removes one vertex and one geometric edge, i.e. lowers the
    degree sum by two.
    """
    n = len(g.vertices)
    if not 0 <= f < n:
        raise ValueError(f"fold count must satisfy 0 <= f < {n}, got {f}")
    return Fraction(2 * g.num_edges - 2 * f, n - f)


def induced_subgraph(g: Graph, edge_ids: Iterable[str], name: str = "") -> Graph:
    """Subgraph spanned by the given edges and their endpoints."""
    keep = sorted(set(edge_ids))
    verts = set()
    edges = []
    for e in keep:
        src, dst = g.origin[e], g.terminus(e)
        verts.update((src, dst))
        lab = g.label[e] if g.label is not None else None
        edges.append((e, src, dst) if lab is None else (e, src, dst, lab))
    return build_graph(sorted(verts), edges, name=name)


def component_subgraph(g: Graph, vertices: Iterable[str], name: str = "") -> Graph:
    vs = set(vertices)
    edges = []
    for e, src, dst, lab in g.edges():
        if src in vs:
            edges.append((e, src, dst) if lab is None else (e, src, dst, lab))
    return build_graph(sorted(vs), edges, name=name)


def spanning_tree(g: Graph, root: Optional[str] = None) -> tuple:
    """BFS spanning tree of the component of ``root``.

    Returns ``(parent_dart, order)``: ``parent_dart[v]`` is the dart arriving at
    ``v`` along the tree (None at the root); ``order`` lists vertices in BFS
    order.  Darts at each vertex are scanned in id order.
    """
    if root is None:
        root = g.vertices[0]
    parent = {root: None}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for d in g.darts_at(u):
            w = g.terminus(d)
            if w not in parent:
                parent[w] = d
                order.append(w)
                queue.append(w)
    return parent, order


def tree_path(g: Graph, parent: Mapping[str, Optional[str]], v: str) -> list:
    """Darts of the tree path from the root to ``v``."""
    path = []
    while parent[v] is not None:
        d = parent[v]
        path.append(d)
        v = g.origin[d]
    path.reverse()
    return path


@dataclass(frozen=True, eq=False)
class GraphMorphism:
    source: Graph
    target: Graph
    vmap: Mapping[str, str]
    dmap: Mapping[str, str]
    name: str = ""

    def __repr__(self):
        return f"GraphMorphism({self.name!r}: {self.source.name} -> {self.target.name})"


@dataclass(frozen=True)
class MorphismReport:
    valid: bool
    violations: tuple = field(default_factory=tuple)


def validate_morphism(m: GraphMorphism) -> MorphismReport:
    src, dst = m.source, m.target
    tv, td = set(dst.vertices), set(dst.involution)
    problems = []
    for v in src.vertices:
        if v not in m.vmap:
            problems.append(f"vertex {v} is not mapped")
        elif m.vmap[v] not in tv:
            problems.append(f"vertex {v} maps to unknown vertex {m.vmap[v]}")
    for d in src.darts:
        if d not in m.dmap:
            problems.append(f"dart {d} is not mapped")
        elif m.dmap[d] not in td:
            problems.append(f"dart {d} maps to unknown dart {m.dmap[d]}")
    if problems:
        return MorphismReport(False, tuple(problems))
    both_labeled = src.labeled and dst.labeled
    for d in src.darts:
        e = m.dmap[d]
        if dst.origin[e] != m.vmap[src.origin[d]]:
            problems.append(
                f"dart {d}: origin {src.origin[d]} maps to {m.vmap[src.origin[d]]} "
                f"but image dart {e} starts at {dst.origin[e]}"
            )
        if m.dmap[src.involution[d]] != dst.involution[e]:
            problems.append(
                f"dart {d}: reverse dart maps to {m.dmap[src.involution[d]]}, "
                f"expected {dst.involution[e]}"
            )
        if both_labeled and src.label[d] != dst.label[e]:
            problems.append(f"dart {d}: label {src.label[d]} maps to label {dst.label[e]}")
    return MorphismReport(not problems, tuple(problems))


def identity_morphism(g: Graph, name: str = "id") -> GraphMorphism:
    return GraphMorphism(g, g, {v: v for v in g.vertices}, {d: d for d in g.darts}, name)


def compose(first: GraphMorphism, second: GraphMorphism, name: str = "") -> GraphMorphism:
    """``second`` after ``first``."""
    return GraphMorphism(
        first.source,
        second.target,
        {v: second.vmap[w] for v, w in first.vmap.items()},
        {d: second.dmap[e] for d, e in first.dmap.items()},
        name,
    )
