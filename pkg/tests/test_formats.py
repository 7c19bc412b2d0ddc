import pytest

from covercomm.abelian import D4, AbelianCommensuration, AveragingInstance, IntMatrix, complete_abelian
from covercomm.amalgam import FiniteAmalgam, find_finite_quotient
from covercomm.errors import ParseError
from covercomm.formats import (
    dump_abelian,
    dump_amalgam,
    dump_averaging,
    dump_commensuration,
    dump_complex,
    dump_completion,
    dump_graph,
    dump_map,
    dump_quotient,
    dump_subgroup,
    dump_witness,
    parse_document,
    read_document,
    subgroup_from_document,
)
from covercomm.graph import identity_morphism
from covercomm.samples import complete_bipartite, double_layer, stabilizer_commensuration, theta_graph
from covercomm.stallings import index


def test_graph_and_map_round_trip():
    g = theta_graph()
    text = dump_graph(g, "T") + dump_map(identity_morphism(g), "T", "T", "id")
    doc = parse_document(text)
    assert doc.graphs["T"] == g.renamed("T")
    m = doc.maps["id"]
    assert dict(m.vmap) == {v: v for v in g.vertices}
    assert m.source is doc.graphs["T"]


def test_labelled_graph_round_trip():
    g = complete_bipartite(2, 2)
    assert parse_document(dump_graph(g, "K")).graphs["K"] == g.renamed("K")


def test_subgroup_round_trip():
    doc = parse_document(dump_subgroup(2, ["aa", "b", "abA"], "S"))
    assert doc.subgroups["S"] == (2, ["aa", "b", "abA"])
    assert index(subgroup_from_document(doc)) == 2


def test_identity_generator_written_as_one():
    doc = parse_document(dump_subgroup(2, ["", "a"], "S"))
    assert doc.subgroups["S"] == (2, ["", "a"])


def test_commensuration_round_trip():
    c = stabilizer_commensuration()
    back = parse_document(dump_commensuration(c)).first("commensurations")
    assert back.i1_images == c.i1_images and back.h_rank == c.h_rank


def test_complex_round_trip():
    sc = double_layer()
    back = parse_document(dump_complex(sc, "D")).first("complexes")
    assert back.squares == sc.squares


def test_abelian_and_completion_round_trip():
    c = AbelianCommensuration(2, IntMatrix.identity(2), IntMatrix.scalar(2, 2), D4, D4, "x")
    comp = complete_abelian(c)
    doc = parse_document(dump_abelian(c) + dump_completion(comp, 2))
    assert doc.first("abelian") == c
    back = doc.first("completions")
    assert back.lattice == comp.lattice and back.indices == comp.indices
    assert {g.rows for g in back.gamma} == {g.rows for g in comp.gamma}


def test_averaging_round_trip():
    inst = AveragingInstance(1, (2,), (((-1, 0), (0, 1)),), ((0, 1),), ((0, 0), (0, 1)))
    assert parse_document(dump_averaging(inst)).first("averaging") == inst


def test_amalgam_quotient_witness_round_trip():
    fa = FiniteAmalgam(((1, 0),), ((1, 0),), (), ())
    cert = find_finite_quotient(fa, 4, True)
    doc = parse_document(dump_amalgam(fa) + dump_quotient(cert) + dump_witness("g0*g2", IntMatrix(((1, 2), (0, 1)))))
    assert doc.first("amalgams") == fa
    assert doc.first("quotients") == cert
    word, m = doc.first("witnesses")
    assert word == "g0*g2" and m.rows == ((1, 2), (0, 1))


def test_comments_and_blank_lines():
    text = "# header\n\ngraph G  # a loop\nvertex v\n\nedge e v v\n"
    assert parse_document(text).graphs["G"].num_edges == 1


@pytest.mark.parametrize(
    "text,line,column,fragment",
    [
        ("vertex v\n", 1, 1, "block header"),
        ("graph G\nvertex v\nedge e v w\n", 3, 10, "dangling"),
        ("graph G\nvertex v\nvertex v\n", 3, 8, "duplicate vertex"),
        ("graph G\nvertex v\nnode x\n", 3, 1, "unknown line"),
        ("subgroup S\nambient 2\ngen ac\n", 3, 5, "ac"),
        ("subgroup S\nambient two\n", 2, 9, "integer"),
        ("amalgam A\na 1,1\n", 2, 3, "not a permutation"),
        ("abelian-commensuration X\ndim 2\nm1 1 0 0\n", 3, 1, "takes 4"),
        ("quotient F\ndegree 2\n", 1, 1, "needs"),
        ("graph G\nvertex v\nedge e v v\nmap f G H\n", 4, 9, "unknown graph"),
    ],
)
def test_parse_errors_have_positions(text, line, column, fragment):
    with pytest.raises(ParseError) as info:
        parse_document(text, "in.txt")
    err = info.value
    assert (err.line, err.column) == (line, column)
    assert fragment in str(err)
    assert str(err).startswith(f"in.txt:{line}:{column}:")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        read_document(tmp_path / "nope.txt")


def test_data_files_parse(data_dir):
    for path in sorted(data_dir.glob("*.txt")):
        doc = read_document(path)
        assert any(getattr(doc, k) for k in vars(doc)), path.name
