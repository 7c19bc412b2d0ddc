"""Small ready-made inputs: graphs, square complexes and commensurations."""

from __future__ import annotations

from .amalgam import Commensuration
from .graph import Graph, build_graph, rose
from .stallings import basis, from_permutations
from .vh import SquareComplex, build_complex


def complete_graph(n: int) -> Graph:
    vs = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            edges.append((f"e{i}{j}", vs[i], vs[j]))
    return build_graph(vs, edges, name=f"K{n}")


def complete_bipartite(m: int, n: int) -> Graph:
    left = [f"x{i}" for i in range(m)]
    right = [f"y{j}" for j in range(n)]
    edges = [(f"e{i}{j}", left[i], right[j]) for i in range(m) for j in range(n)]
    return build_graph(left + right, edges, name=f"K{m},{n}")


def theta_graph() -> Graph:
    return build_graph(["u", "v"], [("e1", "u", "v"), ("e2", "u", "v"), ("e3", "u", "v")], name="theta")


def circulant(n: int, steps) -> Graph:
    vs = [f"v{i:02d}" for i in range(n)]
    edges = []
    for i in range(n):
        for s in steps:
            edges.append((f"e{i:02d}_{s}", vs[i], vs[(i + s) % n]))
    return build_graph(vs, edges, name=f"C{n}{tuple(steps)}")


def torus() -> SquareComplex:
    g = rose(["a", "b"], name="torus")
    return build_complex(g, relators=["abAB"])


def corrupted_torus() -> SquareComplex:
    """Torus with its square listed twice."""
    g = rose(["a", "b"], name="torus2")
    return build_complex(g, squares=[("a", "b", "a'", "b'"), ("a", "b", "a'", "b'")])


def two_layer() -> SquareComplex:
    """Vertical edge a from bottom w to top u, a b-loop on top, a c-loop below."""
    g = build_graph(["u", "w"], [("a", "w", "u", "a"), ("b", "u", "u", "b"), ("c", "w", "w", "c")], name="two-layer")
    return build_complex(g, relators=["abAC"])


def double_layer() -> SquareComplex:
    """Cross-section is a connected double cover of both two-petal roses."""
    g = build_graph(
        ["u", "w"],
        [
            ("a1", "w", "u", "a1"),
            ("a2", "w", "u", "a2"),
            ("b1", "u", "u", "b1"),
            ("b2", "u", "u", "b2"),
            ("c1", "w", "w", "c1"),
            ("c2", "w", "w", "c2"),
        ],
        name="double-layer",
    )
    sigma = {1: {1: 1, 2: 2}, 2: {1: 2, 2: 1}}
    squares = []
    for j in (1, 2):
        for i in (1, 2):
            squares.append((f"a{i}", f"b{j}", f"a{sigma[j][i]}'", f"c{j}'"))
    return build_complex(g, squares=squares)


def product_layers(n: int = 20, steps=(1, 2, 3, 4, 5)) -> SquareComplex:
    """Two copies of a circulant graph joined by one vertical edge per vertex.

    With the defaults there are 20 vertical edges and 100 squares; both
    horizontal layers are 10-regular.
    """
    vs = [f"t{i:02d}" for i in range(n)] + [f"u{i:02d}" for i in range(n)]
    edges = [(f"a{i:02d}", f"u{i:02d}", f"t{i:02d}") for i in range(n)]
    squares = []
    for i in range(n):
        for s in steps:
            j = (i + s) % n
            top, bot = f"h{i:02d}_{s}", f"k{i:02d}_{s}"
            edges.append((top, f"t{i:02d}", f"t{j:02d}"))
            edges.append((bot, f"u{i:02d}", f"u{j:02d}"))
            squares.append((f"a{i:02d}", top, f"a{j:02d}'", bot + "'"))
    g = build_graph(vs, edges, name="product-layers")
    return build_complex(g, squares=squares)


def infinite_dihedral() -> Commensuration:
    """Z <- 2Z -> Z."""
    return Commensuration(1, 1, 1, ("aa",), ("aa",), name="infinite-dihedral")


def stabilizer_commensuration() -> Commensuration:
    """Both maps embed the index-3 point stabiliser of a -> (1 2), b -> (1 2 3)."""
    s = from_permutations(2, {"a": (1, 0, 2), "b": (1, 2, 0)})
    gens = tuple(basis(s))
    return Commensuration(len(gens), 2, 2, gens, gens, name="stabilizer")
