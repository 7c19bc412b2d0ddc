import random

import pytest

from covercomm.amalgam import validate_commensuration
from covercomm.errors import InputError, NotVH
from covercomm.graph import average_degree_after_folds, build_graph, euler_characteristic, free_rank, rose
from covercomm.samples import corrupted_torus, double_layer, product_layers, torus, two_layer
from covercomm.vh import (
    analyze_cross_section,
    build_complex,
    commensuration_from_cross_section,
    cross_section,
    horizontal_subgraph,
    require_vh,
    vh_partition,
)


def test_torus_complex():
    sc = torus()
    assert len(sc.squares) == 1
    part = vh_partition(sc)
    assert part.vertical == {"a"} and part.horizontal == {"b"}


def test_klein_type_relator():
    sc = build_complex(rose(["a", "b"]), relators=["abab"])
    assert len(sc.squares) == 1


def test_relator_using_third_edge():
    sc = build_complex(rose(["a", "b", "c"]), relators=["abcA"])
    assert len(sc.squares) == 1
    assert any(d.startswith("c") for d in sc.squares[0])


def test_relator_must_have_length_four():
    with pytest.raises(InputError):
        build_complex(rose(["a", "b"]), relators=["abA"])


def test_aabb_is_not_vh():
    sc = build_complex(rose(["a", "b"]), relators=["aabb"])
    res = vh_partition(sc)
    assert isinstance(res, NotVH)
    assert res.witness
    with pytest.raises(NotVH):
        require_vh(sc)


def test_two_squares_share_horizontal_edge():
    sc = build_complex(rose(["a", "b", "c"]), relators=["abAB", "cbCB"])
    part = vh_partition(sc)
    assert part.vertical == {"a", "c"} and part.horizontal == {"b"}


def test_swap_flag_exchanges_classes():
    part = vh_partition(torus(), swap=True)
    assert part.vertical == {"b"} and part.horizontal == {"a"}


def test_horizontal_components():
    g, comps = horizontal_subgraph(torus(), vh_partition(torus()))
    assert len(comps) == 1 and g.num_edges == 1
    _, comps = horizontal_subgraph(two_layer(), vh_partition(two_layer()))
    assert len(comps) == 2


def test_no_horizontal_edges():
    sc = build_complex(build_graph(["v"], [("a", "v", "v")]))
    part = vh_partition(sc)
    g, comps = horizontal_subgraph(sc, part)
    assert g.num_edges == 0
    assert comps == []


def test_torus_cross_section():
    cs = cross_section(torus(), vh_partition(torus()))
    assert len(cs.z.vertices) == 1 and cs.z.num_edges == 1
    rep = analyze_cross_section(torus())
    assert rep.both_coverings and rep.degrees == (1, 1)


def test_two_layer_projections_hit_different_components():
    sc = two_layer()
    cs = cross_section(sc, vh_partition(sc))
    assert set(cs.x1.vertices) != set(cs.x2.vertices)
    assert {cs.p1.vmap[v] for v in cs.z.vertices} <= set(cs.x1.vertices)
    assert {cs.p2.vmap[v] for v in cs.z.vertices} <= set(cs.x2.vertices)
    assert analyze_cross_section(sc).degrees == (1, 1)


def test_product_layers_counts():
    sc = product_layers()
    cs = cross_section(sc, vh_partition(sc))
    assert len(cs.z.vertices) == 20 and cs.z.num_edges == 100
    assert euler_characteristic(cs.z) == -80
    assert free_rank(cs.z) == 81
    rep = analyze_cross_section(sc)
    assert rep.both_coverings
    for x in (cs.x1, cs.x2):
        assert all(x.degree(v) == 10 for v in x.vertices)
    assert average_degree_after_folds(cs.z, 0) == 10


def test_product_layers_commensuration_exceeds_letters():
    sc = product_layers()
    with pytest.raises(InputError):
        commensuration_from_cross_section(cross_section(sc, vh_partition(sc)))


def test_corrupted_square_named():
    rep = analyze_cross_section(corrupted_torus())
    assert not rep.both_coverings
    assert ("a", "not locally injective") in rep.coverings[0].violations


def test_euler_multiplicativity_on_coverings():
    for sc in (torus(), two_layer(), double_layer(), product_layers()):
        rep = analyze_cross_section(sc)
        cs = rep.cross_section
        d1, d2 = rep.degrees
        assert euler_characteristic(cs.z) == d1 * euler_characteristic(cs.x1) == d2 * euler_characteristic(cs.x2)
        assert len(cs.z.vertices) == len(vh_partition(sc).vertical)
        assert cs.z.num_edges == len(sc.squares)


def test_torus_commensuration_trivial():
    cs = cross_section(torus(), vh_partition(torus()))
    c = commensuration_from_cross_section(cs)
    rep = validate_commensuration(c)
    assert rep.valid and rep.indices == (1, 1) and rep.trivial


def test_double_layer_commensuration():
    sc = double_layer()
    rep = analyze_cross_section(sc)
    assert rep.degrees == (2, 2)
    c = commensuration_from_cross_section(rep.cross_section)
    v = validate_commensuration(c)
    assert v.valid and v.indices == (2, 2)
    rz = free_rank(rep.cross_section.z)
    assert rz - 1 == 2 * (free_rank(rep.cross_section.x1) - 1)
    assert c.h_rank == rz


def test_partition_invariant_under_relabeling():
    sc = double_layer()
    base = vh_partition(sc)
    rng = random.Random(4)
    for _ in range(10):
        squares = list(sc.squares)
        rng.shuffle(squares)
        rotated = []
        for sq in squares:
            k = rng.randrange(4)
            sq = sq[k:] + sq[:k]
            rotated.append(sq)
        again = build_complex(sc.skeleton, squares=rotated)
        assert vh_partition(again) == base
        assert analyze_cross_section(again).degrees == (2, 2)


def test_mixed_components_rejected():
    # two disjoint two-layer pieces: the p1 ends lie in two components
    g = build_graph(
        ["u1", "w1", "u2", "w2"],
        [
            ("a", "w1", "u1"), ("b", "u1", "u1"), ("c", "w1", "w1"),
            ("e", "w2", "u2"), ("f", "u2", "u2"), ("h", "w2", "w2"),
        ],
    )
    sc = build_complex(g, squares=[("a", "b", "a'", "c'"), ("e", "f", "e'", "h'")])
    with pytest.raises(InputError, match="mix"):
        cross_section(sc, vh_partition(sc))
