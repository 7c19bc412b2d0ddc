from fractions import Fraction

import pytest

from covercomm.errors import DisconnectedGraphError, GraphError, InvalidMorphism
from covercomm.graph import (
    GraphMorphism,
    average_degree_after_folds,
    build_graph,
    compose,
    connected_components,
    euler_characteristic,
    free_rank,
    identity_morphism,
    rose,
    spanning_tree,
    tree_path,
    validate_morphism,
)
from covercomm.samples import complete_bipartite, complete_graph, theta_graph


def test_rose_counts():
    g = rose(["a", "b"])
    assert g.vertices == ("o",)
    assert g.num_edges == 2
    assert g.degree("o") == 4
    assert euler_characteristic(g) == -1
    assert free_rank(g) == 2


def test_loop_contributes_two_darts():
    g = build_graph(["v"], [("e", "v", "v")])
    assert sorted(g.darts_at("v")) == ["e", "e'"]
    assert g.terminus("e") == "v"


def test_multi_edges_allowed():
    g = theta_graph()
    assert g.degree("u") == 3
    assert free_rank(g) == 2


def test_complete_graphs():
    assert euler_characteristic(complete_graph(4)) == -2
    assert euler_characteristic(complete_bipartite(3, 3)) == -3


def test_dangling_endpoint_rejected():
    with pytest.raises(GraphError, match="dangling"):
        build_graph(["a"], [("e", "a", "b")])


def test_duplicate_edge_rejected():
    with pytest.raises(GraphError, match="duplicate edge"):
        build_graph(["a"], [("e", "a", "a"), ("e", "a", "a")])


def test_mixed_labels_rejected():
    with pytest.raises(GraphError, match="every edge"):
        build_graph(["a"], [("e", "a", "a", "x"), ("f", "a", "a")])


def test_label_inverse_on_reverse_dart():
    g = rose(["a"])
    assert g.label["a"] == "a"
    assert g.label["a'"] == "A"
    assert g.dart_with_label("o", "A") == "a'"


def test_disconnected_rank_raises():
    g = build_graph(["a", "b"], [])
    assert len(connected_components(g)) == 2
    with pytest.raises(DisconnectedGraphError):
        free_rank(g)


def test_average_degree_values():
    g = complete_graph(4)
    assert average_degree_after_folds(g, 0) == 3
    assert average_degree_after_folds(g, 1) == Fraction(10, 3)
    with pytest.raises(ValueError):
        average_degree_after_folds(g, 4)


def test_spanning_tree_paths_reach_root():
    g = complete_bipartite(2, 3)
    parent, order = spanning_tree(g, "x0")
    assert order[0] == "x0"
    assert sum(1 for d in parent.values() if d is not None) == len(g.vertices) - 1
    for v in g.vertices:
        path = tree_path(g, parent, v)
        here = "x0"
        for d in path:
            assert g.origin[d] == here
            here = g.terminus(d)
        assert here == v


def test_validate_morphism_reports_broken_involution():
    g = rose(["a"])
    bad = GraphMorphism(g, g, {"o": "o"}, {"a": "a", "a'": "a"})
    rep = validate_morphism(bad)
    assert not rep.valid
    assert rep.violations


def test_identity_compose():
    g = theta_graph()
    i = identity_morphism(g)
    c = compose(i, i)
    assert dict(c.vmap) == {v: v for v in g.vertices}
    assert validate_morphism(c).valid


def test_invalid_morphism_carries_report():
    g = rose(["a"])
    from covercomm.covering import analyze_covering

    with pytest.raises(InvalidMorphism) as info:
        analyze_covering(GraphMorphism(g, g, {}, {}))
    assert not info.value.report.valid
