import pytest

from covercomm.abelian import D4, D6, AbelianCommensuration, IntMatrix, complete_abelian, is_out_finite
from covercomm.amalgam import find_normal_extension
from covercomm.certificates import Certificate, parse_certificate, sha256_text, verify_certificate
from covercomm.errors import ParseError
from covercomm.formats import dump_abelian, dump_commensuration, dump_completion, dump_subgroup_graph, dump_witness
from covercomm.samples import stabilizer_commensuration

I2 = IntMatrix.identity(2)

def completion_cert():
    c = AbelianCommensuration(2, I2, IntMatrix.scalar(2, 2), D4, D4)
    return Certificate("completion", dump_abelian(c) + dump_completion(complete_abelian(c), 2))

def test_round_trip_preserves_fields():
    cert = Certificate("covering", "graph G\nvertex v\n", {"max_vertices": 5}, [("g.txt", sha256_text("x"))], {"degree": 1})
    back = parse_certificate(cert.render())
    assert back.kind == "covering"
    assert back.params == {"max_vertices": "5"}
    assert back.inputs == [("g.txt", sha256_text("x"))]
    assert back.summary == {"degree": "1"}

@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "first line"),
        ("certificate magic\n", "unknown certificate kind"),
        ("certificate covering\ntool covercomm 0.1.0\n", "no payload"),
        ("certificate covering\npayload\ngraph G\n", "end-payload"),
        ("certificate covering\npayload\nend-payload\n", "summary"),
        ("certificate covering\nbogus 1\npayload\nend-payload\nsummary\nend\n", "header"),
    ],
)
def test_malformed_certificates(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_certificate(text)

def test_payload_errors_keep_line_numbers():
    text = "certificate covering\npayload\ngraph G\nvertex v\nedge e v w\nend-payload\nsummary\nend\n"
    res = verify_certificate(parse_certificate(text))
    assert not res.ok
    assert "5:10" in res.problems[0]

def test_completion_certificate_and_mutation():
    cert = completion_cert()
    assert verify_certificate(parse_certificate(cert.render())).ok
    bad = cert.render().replace("indices 4 1", "indices 2 1")
    assert not verify_certificate(parse_certificate(bad)).ok

def test_normal_extension_summary_checked():
    c = stabilizer_commensuration()
    nc = find_normal_extension(c, 8)
    payload = dump_commensuration(c) + dump_subgroup_graph(nc.n_graph, "N")
    assert verify_certificate(Certificate("normal-extension", payload, summary={"index-in-h": 2})).ok
    assert not verify_certificate(Certificate("normal-extension", payload, summary={"index-in-h": 3})).ok

def test_non_normal_subgroup_rejected():
    # N = H maps onto the non-normal point stabiliser
    c = stabilizer_commensuration()
    payload = dump_commensuration(c) + "subgroup N\nambient 4\ngen a\ngen b\ngen c\ngen d\n"
    res = verify_certificate(Certificate("normal-extension", payload))
    assert not res.ok and "not normal" in res.problems[0]

def test_obstruction_witness_checked():
    c = AbelianCommensuration(2, I2, I2, D4, D6)
    cl = is_out_finite(c).closure
    good = dump_abelian(c) + dump_witness(cl.word_string(), cl.witness)
    assert verify_certificate(Certificate("obstruction", good)).ok
    wrong_word = dump_abelian(c) + dump_witness("g0*g1", cl.witness)
    assert not verify_certificate(Certificate("obstruction", wrong_word)).ok
    finite = dump_abelian(c) + dump_witness("g0", D4[0])
    res = verify_certificate(Certificate("obstruction", finite))
    assert "finite order" in " ".join(res.problems)
