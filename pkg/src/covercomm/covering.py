"""Covering maps, folding, degree refinement and the common-cover search."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

from .errors import GraphError, InvalidMorphism, NoCommonCover
from .graph import (
    Graph,
    GraphMorphism,
    build_graph,
    edge_of,
    free_rank,
    is_connected,
    is_forward,
    require_connected,
    spanning_tree,
    validate_morphism,
)

NOT_INJECTIVE = "not locally injective"
NOT_SURJECTIVE = "not locally surjective"


@dataclass(frozen=True)
class CoveringReport:
    is_covering: bool
    degree: Optional[int]
    violations: tuple  # (vertex, reason) pairs


def analyze_covering(m: GraphMorphism) -> CoveringReport:
    """Check local bijectivity of ``m`` at every source vertex."""
    report = validate_morphism(m)
    if not report.valid:
        raise InvalidMorphism(report)
    src, dst = m.source, m.target
    violations = []
    for v in src.vertices:
        images = [m.dmap[d] for d in src.darts_at(v)]
        if len(set(images)) != len(images):
            violations.append((v, NOT_INJECTIVE))
        if set(images) != set(dst.darts_at(m.vmap[v])):
            violations.append((v, NOT_SURJECTIVE))
    is_cov = not violations
    degree = None
    if is_cov and is_connected(dst):
        fibres = Counter(m.vmap.values())
        sizes = {fibres.get(x, 0) for x in dst.vertices}
        if len(sizes) == 1 and 0 not in sizes:
            degree = sizes.pop()
    return CoveringReport(is_cov, degree, tuple(violations))


class FoldResult(NamedTuple):
    graph: Graph
    morphism: GraphMorphism
    count: int
    steps: tuple  # (kept dart, folded dart, whether two vertices were identified)


def fold(m: GraphMorphism) -> FoldResult:
    """Fold the source of ``m`` until the induced map is locally injective.

    At each step the least pair of darts (in id order) sharing an origin and
    an image is identified.
    """
    report = validate_morphism(m)
    if not report.valid:
        raise InvalidMorphism(report)
    src = m.source
    origin = dict(src.origin)
    inv = dict(src.involution)
    image = dict(m.dmap)
    alive = set(src.darts)
    vertices = set(src.vertices)
    steps = []
    while True:
        seen = {}
        pair = None
        for d in sorted(alive):
            key = (origin[d], image[d])
            if key in seen:
                pair = (seen[key], d)
                break
            seen[key] = d
        if pair is None:
            break
        keep, drop = pair
        t_keep, t_drop = origin[inv[keep]], origin[inv[drop]]
        merged = t_keep != t_drop
        if merged:
            rep, gone = min(t_keep, t_drop), max(t_keep, t_drop)
            for d in alive:
                if origin[d] == gone:
                    origin[d] = rep
            vertices.discard(gone)
        alive.discard(drop)
        alive.discard(inv[drop])
        steps.append((keep, drop, merged))

    edges = []
    for d in sorted(alive):
        if is_forward(d):
            lab = src.label[d] if src.label is not None else None
            e = (d, origin[d], origin[inv[d]])
            edges.append(e if lab is None else e + (lab,))
    folded = build_graph(sorted(vertices), edges, name=src.name + "_folded" if src.name else "")
    vmap = {v: m.vmap[v] for v in folded.vertices}
    dmap = {d: image[d] for d in folded.darts}
    induced = GraphMorphism(folded, m.target, vmap, dmap, m.name)
    return FoldResult(folded, induced, len(steps), tuple(steps))


@dataclass(frozen=True)
class DegreeRefinement:
    classes: tuple  # tuple of vertex tuples, in canonical class order
    matrix: tuple  # matrix[i][j] = darts from a class-i vertex into class j
    rounds: int

    def class_of(self, v: str) -> int:
        for i, cls in enumerate(self.classes):
            if v in cls:
                return i
        raise KeyError(v)


def degree_refinement(g: Graph) -> DegreeRefinement:
    """Coarsest equitable partition, with classes named by sorted signatures.

    A vertex signature is its current class together with the number of darts
    it sends into each class.  Classes are re-indexed by the sorted list of
    distinct signatures, so the resulting matrix is an isomorphism invariant
    and two graphs share a universal cover exactly when their matrices agree.
    """
    require_connected(g)
    colour = {v: 0 for v in g.vertices}
    n_colours = 1
    rounds = 0
    while True:
        sig = {}
        for v in g.vertices:
            counts = [0] * n_colours
            for d in g.darts_at(v):
                counts[colour[g.terminus(d)]] += 1
            sig[v] = (colour[v], tuple(counts))
        ordered = sorted(set(sig.values()))
        index = {s: i for i, s in enumerate(ordered)}
        new_colour = {v: index[sig[v]] for v in g.vertices}
        rounds += 1
        stable = len(ordered) == n_colours
        colour, n_colours = new_colour, len(ordered)
        if stable:
            break
    classes = [[] for _ in range(n_colours)]
    for v in g.vertices:
        classes[colour[v]].append(v)
    matrix = []
    for cls in classes:
        row = [0] * n_colours
        for d in g.darts_at(cls[0]):
            row[colour[g.terminus(d)]] += 1
        matrix.append(tuple(row))
    return DegreeRefinement(tuple(tuple(c) for c in classes), tuple(matrix), rounds)


def same_universal_cover(g1: Graph, g2: Graph) -> bool:
    return degree_refinement(g1).matrix == degree_refinement(g2).matrix


def _conjugate_perm(tau: Sequence[int], s: Sequence[int]) -> tuple:
    """Relabel sheets by ``tau``: the result sends ``tau[i]`` to ``tau[s[i]]``."""
    out = [0] * len(s)
    for i, j in enumerate(s):
        out[tau[i]] = tau[j]
    return tuple(out)


def canonical_voltage_tuples(degree: int, count: int) -> Iterator[tuple]:
    """Permutation tuples that are lexicographically least under sheet relabeling.

    Tuples are produced in lexicographic order.  Two tuples related by a
    simultaneous conjugation give isomorphic covers; only the least one of
    each class is produced.
    """
    perms = list(itertools.permutations(range(degree)))

    def extend(prefix, stabiliser):
        if len(prefix) == count:
            yield tuple(prefix)
            return
        for s in perms:
            keep = []
            for tau in stabiliser:
                c = _conjugate_perm(tau, s)
                if c < s:
                    break
                if c == s:
                    keep.append(tau)
            else:
                prefix.append(s)
                yield from extend(prefix, keep)
                prefix.pop()

    yield from extend([], perms)


def _transitive(degree: int, perms: Sequence[Sequence[int]]) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for p in perms:
            for j in (p[i], p.index(i)):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
    return len(seen) == degree


def voltage_cover(g: Graph, voltages: dict, degree: int, name: str = "") -> tuple:
    """Cover of ``g`` defined by permutation voltages on edges.

    ``voltages`` maps forward edge ids to permutations of ``range(degree)``;
    missing edges get the identity.  Sheet ``i`` of edge ``e`` runs from
    ``src.i`` to ``dst.voltage[i]``.  Returns ``(cover, projection)``.
    """
    ident = tuple(range(degree))
    vertices = [f"{v}.{i}" for v in g.vertices for i in range(degree)]
    edges = []
    for e, src, dst, lab in g.edges():
        sigma = voltages.get(e, ident)
        for i in range(degree):
            spec = (f"{e}.{i}", f"{src}.{i}", f"{dst}.{sigma[i]}")
            edges.append(spec if lab is None else spec + (lab,))
    cover = build_graph(vertices, edges, name=name)
    vmap = {f"{v}.{i}": v for v in g.vertices for i in range(degree)}
    dmap = {}
    for d in cover.darts:
        # edge ids may contain dots; the sheet suffix is after the last dot
        e = edge_of(d).rpartition(".")[0]
        dmap[d] = e if is_forward(d) else e + "'"
    proj = GraphMorphism(cover, g, vmap, dmap, name=f"{name}->{g.name}" if name else "")
    return cover, proj


def find_covering_map(z: Graph, x: Graph) -> Optional[GraphMorphism]:
    """Least locally bijective morphism ``z -> x`` by backtracking, or None.

    Vertices of ``z`` are processed in BFS order from its least vertex; at
    each step candidate images are tried in id order.
    """
    require_connected(z)
    if not z.vertices:
        return None
    labelled = z.labeled and x.labeled
    vmap, dmap = {}, {}
    used = {}  # target vertex -> set of target darts used at z-vertex
    _, order = spanning_tree(z)

    def next_dart():
        for v in order:
            if v in vmap:
                for d in z.darts_at(v):
                    if d not in dmap:
                        return d
        return None

    def assign_vertex(v, xv, trail):
        if v in vmap:
            return vmap[v] == xv
        if z.degree(v) != x.degree(xv):
            return False
        vmap[v] = xv
        used[v] = set()
        trail.append(("v", v))
        return True

    def assign_dart(d, e, trail):
        if d in dmap:
            return dmap[d] == e
        v = z.origin[d]
        if e in used[v]:
            return False
        if labelled and z.label[d] != x.label[e]:
            return False
        dmap[d] = e
        used[v].add(e)
        trail.append(("d", d))
        return True

    def undo(trail):
        for kind, key in reversed(trail):
            if kind == "v":
                del vmap[key]
                del used[key]
            else:
                used[z.origin[key]].discard(dmap[key])
                del dmap[key]

    def search():
        d = next_dart()
        if d is None:
            return len(vmap) == len(z.vertices)
        v = z.origin[d]
        for e in x.darts_at(vmap[v]):
            trail = []
            ok = assign_dart(d, e, trail)
            if ok:
                rd, re_ = z.involution[d], x.involution[e]
                ok = assign_vertex(z.origin[rd], x.origin[re_], trail) and assign_dart(rd, re_, trail)
            if ok and search():
                return True
            undo(trail)
        return False

    z0 = z.vertices[0]
    for xv in x.vertices:
        trail = []
        if assign_vertex(z0, xv, trail) and search():
            return GraphMorphism(z, x, dict(vmap), dict(dmap))
        undo(trail)
    return None


def _enumeration_cost(g: Graph, degree: int) -> float:
    return math.lgamma(degree + 1) * free_rank(g)


def find_common_cover(g1: Graph, g2: Graph, max_vertices: int) -> Optional[tuple]:
    """Search for a connected common cover with at most ``max_vertices`` vertices.

    Returns ``(z, p1, p2)`` with ``p1: z -> g1`` and ``p2: z -> g2``, or None
    when the bound is exhausted.  Raises :class:`NoCommonCover` when the
    degree refinements differ, in which case no common cover exists.
    """
    require_connected(g1)
    require_connected(g2)
    if not same_universal_cover(g1, g2):
        raise NoCommonCover(f"{g1.name or 'g1'} and {g2.name or 'g2'} have different universal covers")
    n1, n2 = len(g1.vertices), len(g2.vertices)
    step = n1 * n2 // math.gcd(n1, n2)
    for n in range(step, max_vertices + 1, step):
        d1, d2 = n // n1, n // n2
        if d1 * g1.num_edges != d2 * g2.num_edges:
            continue
        # enumerate covers of whichever graph has the smaller voltage space
        candidates = [
            (_enumeration_cost(g1, d1), n1, 0, g1, d1, g2),
            (_enumeration_cost(g2, d2), n2, 1, g2, d2, g1),
        ]
        _, _, which, base, degree, other = min(candidates, key=lambda c: c[:3])
        found = _search_degree(base, degree, other)
        if found is not None:
            z, proj, other_map = found
            return (z, proj, other_map) if which == 0 else (z, other_map, proj)
    return None


def _search_degree(base: Graph, degree: int, other: Graph) -> Optional[tuple]:
    parent, _ = spanning_tree(base)
    tree_edges = {edge_of(d) for d in parent.values() if d is not None}
    free_edges = [e for e, *_ in base.edges() if e not in tree_edges]
    for voltages in canonical_voltage_tuples(degree, len(free_edges)):
        if not _transitive(degree, voltages):
            continue
        z, proj = voltage_cover(base, dict(zip(free_edges, voltages)), degree, name="Z")
        target_map = find_covering_map(z, other)
        if target_map is not None:
            return z, proj, target_map
    return None


def fiber_product(p1: GraphMorphism, p2: GraphMorphism, name: str = "") -> tuple:
    """Pullback of two morphisms with a common target.

    Vertices are compatible vertex pairs ``(u,w)``; darts are compatible dart
    pairs.  Returns ``(graph, q1, q2)`` with ``q_i`` the projections.
    """
    if p1.target != p2.target:
        raise GraphError("fiber product needs morphisms with a common target")
    x = p1.target
    a, b = p1.source, p2.source
    by_image = {}
    for w in b.vertices:
        by_image.setdefault(p2.vmap[w], []).append(w)
    vertices = [f"({u},{w})" for u in a.vertices for w in by_image.get(p1.vmap[u], [])]
    dart_by_image = {}
    for e in b.darts:
        dart_by_image.setdefault(p2.dmap[e], []).append(e)
    edges = []
    q1v, q2v, q1d, q2d = {}, {}, {}, {}
    for u in a.vertices:
        for w in by_image.get(p1.vmap[u], []):
            q1v[f"({u},{w})"], q2v[f"({u},{w})"] = u, w
    for d in a.darts:
        # one dart per geometric edge; with labels, the one whose image reads forward
        if not (is_forward(p1.dmap[d]) if x.labeled else is_forward(d)):
            continue
        for e in dart_by_image.get(p1.dmap[d], []):
            eid = f"({d},{e})"
            src = f"({a.origin[d]},{b.origin[e]})"
            dst = f"({a.terminus(d)},{b.terminus(e)})"
            lab = x.label[p1.dmap[d]] if x.labeled else None
            edges.append((eid, src, dst) if lab is None else (eid, src, dst, lab))
            q1d[eid], q2d[eid] = d, e
            q1d[eid + "'"], q2d[eid + "'"] = a.involution[d], b.involution[e]
    g = build_graph(vertices, edges, name=name)
    return g, GraphMorphism(g, a, q1v, q1d, "q1"), GraphMorphism(g, b, q2v, q2d, "q2")
