"""Square complexes, their vertical/horizontal structure and cross-section graphs.

A square complex is a graph (its 1-skeleton) together with closed paths of
length four.  When the edges split into vertical and horizontal classes so
that every square alternates between them, the midpoints of the vertical
edges and the mid-segments of the squares form the cross-section graph ``Z``,
which projects to the horizontal graph through either horizontal side of each
square.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .amalgam import Commensuration, validate_commensuration
from .covering import analyze_covering, fold
from .errors import GraphError, InputError, NotVH
from .graph import (
    Graph,
    GraphMorphism,
    build_graph,
    component_subgraph,
    connected_components,
    edge_of,
    euler_characteristic,
    free_rank,
    induced_subgraph,
    is_connected,
    is_forward,
    reverse_dart,
    spanning_tree,
    tree_path,
    validate_morphism,
)
from .stallings import ALPHABET, free_reduce

TOKEN_RE = re.compile(r"[a-zA-Z][0-9]*")


@dataclass(frozen=True)
class SquareComplex:
    skeleton: Graph
    squares: tuple  # tuples of four darts

    @property
    def name(self) -> str:
        return self.skeleton.name


def _check_square(g: Graph, sq: Sequence[str], what: str) -> tuple:
    sq = tuple(sq)
    if len(sq) != 4:
        raise GraphError(f"{what}: a square needs 4 darts, got {len(sq)}")
    for d in sq:
        if d not in g.involution:
            raise GraphError(f"{what}: unknown dart {d}")
    for k in range(4):
        if g.terminus(sq[k]) != g.origin[sq[(k + 1) % 4]]:
            raise GraphError(f"{what}: darts {sq[k]} and {sq[(k + 1) % 4]} do not join up")
    return sq


def _readings(sq: tuple) -> list:
    rev = tuple(reverse_dart(d) for d in reversed(sq))
    return [cyc[k:] + cyc[:k] for cyc in (sq, rev) for k in range(4)]


def tokenize_relator(word: str) -> list:
    tokens = TOKEN_RE.findall(word)
    if "".join(tokens) != word:
        raise InputError(f"relator {word!r} is not a sequence of letters")
    return tokens


def _lift_relator(g: Graph, tokens: list, start: str) -> Optional[tuple]:
    """Darts spelling ``tokens`` from ``start``, None if the first letter is absent there."""
    darts = []
    v = start
    for k, t in enumerate(tokens):
        d = g.dart_with_label(v, t)
        if d is None:
            if k == 0:
                return None
            raise GraphError(f"relator {''.join(tokens)} is blocked at vertex {v}: no dart labelled {t}")
        darts.append(d)
        v = g.terminus(d)
    if v != start:
        raise GraphError(f"relator {''.join(tokens)} does not close up from vertex {start}")
    return tuple(darts)


def build_complex(
    skeleton: Graph,
    squares: Iterable[Sequence[str]] = (),
    relators: Iterable[str] = (),
) -> SquareComplex:
    """Attach squares given by dart lists and by relator words.

    A relator is lifted from every vertex where its first letter starts a
    dart; lifts of the same square found from different vertices are kept
    once.  Explicit squares are kept as given, duplicates included.
    """
    out = [_check_square(skeleton, sq, f"square {k + 1}") for k, sq in enumerate(squares)]
    relators = list(relators)
    if relators and not skeleton.labeled:
        raise GraphError("relators need a labelled skeleton")
    known = set(skeleton.label.values()) if skeleton.labeled else set()
    for word in relators:
        tokens = tokenize_relator(word)
        if len(tokens) != 4:
            raise GraphError(f"relator {word} has length {len(tokens)}, squares need 4")
        for t in tokens:
            if t not in known:
                raise GraphError(f"relator {word}: unknown edge label {t}")
        seen = set()
        found = 0
        for v in skeleton.vertices:
            sq = _lift_relator(skeleton, tokens, v)
            if sq is None:
                continue
            found += 1
            key = min(_readings(sq))
            if key not in seen:
                seen.add(key)
                out.append(sq)
        if not found:
            raise GraphError(f"relator {word} does not lift to a closed path anywhere")
    return SquareComplex(skeleton, tuple(out))


@dataclass(frozen=True)
class VHPartition:
    vertical: frozenset
    horizontal: frozenset


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


def vh_partition(sc: SquareComplex, swap: bool = False):
    """Vertical/horizontal split, or a :class:`NotVH` value describing the failure.

    Opposite sides of a square share a class; adjacent sides must differ.  In
    each connected piece of the constraint graph the class holding the least
    edge id is vertical (reversed by ``swap``).
    """
    edges = [e for e, *_ in sc.skeleton.edges()]
    uf = _UnionFind(edges)
    for sq in sc.squares:
        uf.union(edge_of(sq[0]), edge_of(sq[2]))
        uf.union(edge_of(sq[1]), edge_of(sq[3]))
    adjacent = {}
    for k, sq in enumerate(sc.squares):
        for i in range(4):
            x, y = uf.find(edge_of(sq[i])), uf.find(edge_of(sq[(i + 1) % 4]))
            if x == y:
                return NotVH(
                    f"square {k + 1} has adjacent sides {edge_of(sq[i])} and "
                    f"{edge_of(sq[(i + 1) % 4])} forced into the same class",
                    tuple(sq),
                )
            adjacent.setdefault(x, []).append((y, k))
            adjacent.setdefault(y, []).append((x, k))
    color = {}
    parent = {}
    for root in sorted({uf.find(e) for e in edges}):
        if root in color:
            continue
        color[root] = 0
        parent[root] = None
        stack = [root]
        while stack:
            x = stack.pop()
            for y, k in adjacent.get(x, ()):
                if y not in color:
                    color[y] = 1 - color[x]
                    parent[y] = x
                    stack.append(y)
                elif color[y] == color[x]:
                    return NotVH(
                        f"odd cycle of classes closed by square {k + 1}",
                        tuple(_class_path(parent, x)) + tuple(reversed(_class_path(parent, y))),
                    )
    # roots are least members of their classes and are visited in order, so the
    # least edge of each constraint component sits in a colour-0 class
    vertical = frozenset(e for e in edges if (color[uf.find(e)] == 0) != swap)
    return VHPartition(vertical, frozenset(edges) - vertical)


def _class_path(parent, x):
    path = []
    while x is not None:
        path.append(x)
        x = parent[x]
    return path


def require_vh(sc: SquareComplex, swap: bool = False) -> VHPartition:
    part = vh_partition(sc, swap)
    if isinstance(part, NotVH):
        raise part
    return part


def horizontal_subgraph(sc: SquareComplex, part: VHPartition) -> tuple:
    """Subgraph of horizontal edges and its components (least vertex first)."""
    g = induced_subgraph(sc.skeleton, part.horizontal, name="horizontal")
    return g, connected_components(g)


@dataclass(frozen=True)
class CrossSection:
    z: Graph
    p1: GraphMorphism
    p2: GraphMorphism

    @property
    def x1(self) -> Graph:
        return self.p1.target

    @property
    def x2(self) -> Graph:
        return self.p2.target


def oriented_square(sq: tuple, vertical: frozenset) -> tuple:
    """Rotation/reversal of ``sq`` reading (vertical, horizontal, vertical, horizontal)
    and starting with its least vertical dart."""
    return min(r for r in _readings(sq) if edge_of(r[0]) in vertical)


def cross_section(sc: SquareComplex, part: VHPartition) -> CrossSection:
    """Cross-section graph with its two projections to the horizontal graph.

    For a square read as ``(v, h, v2, h2)``, the Z-edge runs from the midpoint
    of ``v`` to that of ``v2``; ``p1`` sends it to ``h`` and ``p2`` to the
    reverse of ``h2``.  Each vertical edge thereby gets a ``p1`` end and a
    ``p2`` end, which every square must agree on.
    """
    g = sc.skeleton
    horiz, comps = horizontal_subgraph(sc, part)
    vertical = part.vertical
    ends = {}  # vertical edge -> (p1 end, p2 end)
    z_edges = []
    d1, d2 = {}, {}

    def pin(dart, p1_end, p2_end, k):
        e = edge_of(dart)
        if e in ends and ends[e] != (p1_end, p2_end):
            raise InputError(
                f"squares mix components: square {k + 1} attaches vertical edge {e} the other way round"
            )
        ends[e] = (p1_end, p2_end)

    for k, sq in enumerate(sc.squares):
        v, h, v2, h2 = oriented_square(sq, vertical)
        pin(v, g.terminus(v), g.origin[v], k)
        pin(v2, g.origin[v2], g.terminus(v2), k)
        name = f"s{k}"
        z_edges.append((name, edge_of(v), edge_of(v2)))
        d1[name], d1[name + "'"] = h, reverse_dart(h)
        d2[name], d2[name + "'"] = reverse_dart(h2), h2
    for e in sorted(vertical):
        if e not in ends:
            ends[e] = (g.terminus(e), g.origin[e])
    z = build_graph(sorted(vertical), z_edges, name="Z")

    comp_of = {v: i for i, comp in enumerate(comps) for v in comp}
    targets = []
    for side in (0, 1):
        used = {comp_of.get(ends[e][side]) for e in vertical}
        if None in used:
            raise InputError(f"a vertical edge has its p{side + 1} end off the horizontal graph")
        if len(used) != 1:
            raise InputError(f"squares mix components: p{side + 1} ends lie in {len(used)} horizontal components")
        i = used.pop()
        targets.append(component_subgraph(horiz, comps[i], name=f"X{side + 1}"))
    p1 = GraphMorphism(z, targets[0], {e: ends[e][0] for e in z.vertices}, d1, "p1")
    p2 = GraphMorphism(z, targets[1], {e: ends[e][1] for e in z.vertices}, d2, "p2")
    return CrossSection(z, p1, p2)


@dataclass(frozen=True)
class CrossSectionReport:
    partition: object  # VHPartition or NotVH
    cross_section: Optional[CrossSection]
    coverings: tuple  # two CoveringReports
    fold_counts: tuple
    euler_characteristic: Optional[int]
    free_rank: Optional[int]
    target_euler: tuple

    @property
    def is_vh(self) -> bool:
        return isinstance(self.partition, VHPartition)

    @property
    def both_coverings(self) -> bool:
        return bool(self.coverings) and all(r.is_covering for r in self.coverings)

    @property
    def degrees(self) -> tuple:
        return tuple(r.degree for r in self.coverings)


def analyze_cross_section(sc: SquareComplex, swap: bool = False) -> CrossSectionReport:
    part = vh_partition(sc, swap)
    if isinstance(part, NotVH):
        return CrossSectionReport(part, None, (), (), None, None, ())
    cs = cross_section(sc, part)
    reports = tuple(analyze_covering(p) for p in (cs.p1, cs.p2))
    folds = tuple(fold(p).count for p in (cs.p1, cs.p2))
    chi = euler_characteristic(cs.z)
    rank = free_rank(cs.z) if is_connected(cs.z) else None
    return CrossSectionReport(
        part, cs, reports, folds, chi, rank, tuple(euler_characteristic(p.target) for p in (cs.p1, cs.p2))
    )


def _loop_letters(x: Graph) -> tuple:
    """Spanning tree of ``x`` at its least vertex and a letter for each other edge."""
    parent, _ = spanning_tree(x, x.vertices[0])
    tree = {edge_of(d) for d in parent.values() if d is not None}
    others = [e for e, *_ in x.edges() if e not in tree]
    if len(others) > len(ALPHABET):
        raise InputError("too many independent loops for single-letter words")
    return parent, {e: ALPHABET[i] for i, e in enumerate(others)}


def _path_word(darts: Iterable[str], letters: dict) -> str:
    out = []
    for d in darts:
        x = letters.get(edge_of(d))
        if x is not None:
            out.append(x if is_forward(d) else x.upper())
    return free_reduce("".join(out))


def commensuration_from_cross_section(cs: CrossSection, name: str = "") -> Commensuration:
    """Commensuration ``pi1(X1) <- pi1(Z) -> pi1(X2)`` induced by the projections.

    Fundamental groups are free on the non-tree edges of breadth-first
    spanning trees rooted at the least vertex of each graph.  Tree edges read
    as the identity, so a path's word is just its sequence of non-tree edges.
    """
    for p in (cs.p1, cs.p2):
        rep = validate_morphism(p)
        if not rep.valid:
            raise InputError(f"{p.name} is not a morphism: {rep.violations[0]}")
        if not analyze_covering(p).is_covering:
            raise InputError(f"{p.name} is not a covering map")
    if not is_connected(cs.z):
        raise InputError("the cross-section graph is disconnected")
    z = cs.z
    z_parent, z_letters = _loop_letters(z)
    loops = []
    for e in sorted(z_letters):
        path = tree_path(z, z_parent, z.origin[e]) + [e]
        back = [reverse_dart(d) for d in reversed(tree_path(z, z_parent, z.terminus(e)))]
        loops.append(path + back)
    images = []
    for p in (cs.p1, cs.p2):
        _, letters = _loop_letters(p.target)
        images.append(tuple(_path_word([p.dmap[d] for d in loop], letters) for loop in loops))
    ranks = [free_rank(p.target) for p in (cs.p1, cs.p2)]
    c = Commensuration(len(loops), ranks[0], ranks[1], images[0], images[1], name)
    rep = validate_commensuration(c)
    if not rep.valid:
        raise AssertionError("induced commensuration failed validation: " + "; ".join(rep.problems))
    return c
