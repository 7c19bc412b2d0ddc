"""Plain-text certificates and their verification.

Layout::

    certificate <kind>
    tool covercomm <version>
    param <key> <value>
    input <label> sha256 <hex>
    payload
    ... blocks in the module text formats ...
    end-payload
    summary
    <key> <value ...>
    end

Verification replays the cheap check for the payload (a covering test, a
permutation relation check, ...) and never re-runs the search that produced it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .abelian import has_infinite_order, transported_holonomy, verify_completion
from .amalgam import normal_commensuration, verify_finite_quotient
from .covering import analyze_covering
from .errors import CovercommError, InputError, ParseError
from .formats import parse_document, tokenize
from .stallings import subgroup_graph
from .vh import cross_section, require_vh

KINDS = (
    "covering",
    "common-cover",
    "normal-extension",
    "finite-quotient",
    "completion",
    "obstruction",
    "cross-section",
)


class DigestMismatch(InputError):
    pass


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Certificate:
    kind: str
    payload: str
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)  # (label, sha256)
    summary: dict = field(default_factory=dict)
    version: str = __version__

    def render(self) -> str:
        lines = [f"certificate {self.kind}", f"tool covercomm {self.version}"]
        for k, v in self.params.items():
            lines.append(f"param {k} {v}")
        for label, digest in self.inputs:
            lines.append(f"input {label} sha256 {digest}")
        lines.append("payload")
        lines += self.payload.strip("\n").splitlines()
        lines.append("end-payload")
        lines.append("summary")
        for k, v in self.summary.items():
            lines.append(f"{k} {v}")
        lines.append("end")
        return "\n".join(lines) + "\n"


def parse_certificate(text: str, source: Optional[str] = None) -> Certificate:
    raw = text.splitlines()
    lines = tokenize(text)
    if not lines or lines[0].key != "certificate" or len(lines[0].args) != 1:
        raise ParseError("expected 'certificate <kind>' on the first line", 1, 1, source)
    kind = lines[0].args[0].text
    if kind not in KINDS:
        t = lines[0].args[0]
        raise ParseError(f"unknown certificate kind {kind!r}", t.line, t.column, source)
    cert = Certificate(kind, "")
    i = 1
    while i < len(lines) and lines[i].key != "payload":
        line = lines[i]
        if line.key == "tool" and len(line.args) == 2:
            cert.version = line.args[1].text
        elif line.key == "param" and len(line.args) >= 2:
            cert.params[line.args[0].text] = " ".join(t.text for t in line.args[1:])
        elif line.key == "input" and len(line.args) == 3 and line.args[1].text == "sha256":
            cert.inputs.append((line.args[0].text, line.args[2].text))
        else:
            t = line.tokens[0]
            raise ParseError(f"unexpected line in certificate header: {line.key!r}", t.line, t.column, source)
        i += 1
    if i == len(lines):
        raise ParseError("certificate has no payload section", source=source)
    start = lines[i].number
    end = next((ln.number for ln in lines[i:] if ln.key == "end-payload"), None)
    if end is None:
        raise ParseError("certificate payload is not terminated by 'end-payload'", source=source)
    # keep original line numbers for payload diagnostics
    cert.payload = "\n" * start + "\n".join(raw[start:end - 1]) + "\n"
    rest = [ln for ln in lines if ln.number > end]
    if not rest or rest[0].key != "summary":
        raise ParseError("certificate has no summary section", source=source)
    for line in rest[1:]:
        if line.key == "end":
            break
        cert.summary[line.key] = " ".join(t.text for t in line.args)
    else:
        raise ParseError("certificate summary is not terminated by 'end'", source=source)
    return cert


def read_certificate(path) -> Certificate:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", source=str(path)) from None
    return parse_certificate(text, str(path))


@dataclass
class VerifyResult:
    ok: bool
    problems: list

    def __bool__(self):
        return self.ok


def check_inputs(cert: Certificate, paths: Sequence) -> None:
    """Compare supplied input files against the recorded digests, in order."""
    if len(paths) > len(cert.inputs):
        raise DigestMismatch(f"certificate records {len(cert.inputs)} input(s), {len(paths)} supplied")
    for (label, digest), path in zip(cert.inputs, paths):
        got = sha256_file(path)
        if got != digest:
            raise DigestMismatch(f"{path}: sha256 {got[:16]}... does not match recorded input {label} ({digest[:16]}...)")


def verify_certificate(cert: Certificate, inputs: Sequence = ()) -> VerifyResult:
    check_inputs(cert, inputs)
    try:
        problems = _VERIFIERS[cert.kind](cert)
    except CovercommError as exc:
        problems = [f"payload rejected: {exc}"]
    return VerifyResult(not problems, problems)


def _summary_int(cert, key):
    v = cert.summary.get(key)
    try:
        return int(v) if v is not None else None
    except ValueError:
        return None


def _verify_covering(cert):
    doc = parse_document(cert.payload, "payload")
    m = doc.only("maps")
    rep = analyze_covering(m)
    problems = [f"{v}: {why}" for v, why in rep.violations]
    want = _summary_int(cert, "degree")
    if rep.is_covering and want is not None and rep.degree != want:
        problems.append(f"degree is {rep.degree}, summary says {want}")
    return problems


def _verify_common(cert):
    doc = parse_document(cert.payload, "payload")
    problems = []
    for name in ("p1", "p2"):
        m = doc.maps.get(name)
        if m is None:
            problems.append(f"missing map {name}")
            continue
        rep = analyze_covering(m)
        problems += [f"{name} at {v}: {why}" for v, why in rep.violations]
        want = _summary_int(cert, f"degree-{name}")
        if rep.is_covering and want is not None and rep.degree != want:
            problems.append(f"{name} has degree {rep.degree}, summary says {want}")
    if not problems and doc.maps["p1"].source != doc.maps["p2"].source:
        problems.append("p1 and p2 have different sources")
    return problems


def _verify_normal_extension(cert):
    doc = parse_document(cert.payload, "payload")
    c = doc.first("commensurations")
    rank, gens = doc.first("subgroups")
    n = subgroup_graph(rank, gens)
    nc = normal_commensuration(c, n)
    want = _summary_int(cert, "index-in-h")
    if want is not None and nc.index_in_h != want:
        return [f"[H:N] is {nc.index_in_h}, summary says {want}"]
    return []


def _verify_quotient(cert):
    doc = parse_document(cert.payload, "payload")
    return verify_finite_quotient(doc.first("amalgams"), doc.first("quotients"))


def _verify_completion(cert):
    doc = parse_document(cert.payload, "payload")
    check = verify_completion(doc.first("abelian"), doc.first("completions"))
    return list(check.problems)


def _verify_obstruction(cert):
    doc = parse_document(cert.payload, "payload")
    problems = []
    if doc.witnesses:
        c = doc.first("abelian")
        word, mat = doc.first("witnesses")
        gens = transported_holonomy(c, 1) + transported_holonomy(c, 2)
        prod = None
        for tok in word.split("*"):
            if not tok.startswith("g") or not tok[1:].isdigit() or int(tok[1:]) >= len(gens):
                return [f"bad witness word {word!r}"]
            g = gens[int(tok[1:])]
            prod = g if prod is None else prod @ g
        if prod is None or prod.rows != mat.rows:
            problems.append("witness word does not multiply out to the witness matrix")
        if not has_infinite_order(mat):
            problems.append("witness matrix has finite order")
        return problems
    if doc.commensurations:
        c = doc.first("commensurations")
        if doc.subgroups:
            rank, gens = doc.first("subgroups")
            normal_commensuration(c, subgroup_graph(rank, gens))
        if doc.quotients:
            problems += verify_finite_quotient(doc.first("amalgams"), doc.first("quotients"))
        return problems
    return ["obstruction certificate has nothing to check"]


def _verify_cross_section(cert):
    doc = parse_document(cert.payload, "payload")
    sc = doc.first("complexes")
    swap = cert.params.get("swap") == "yes"
    cs = cross_section(sc, require_vh(sc, swap))
    problems = []
    if doc.graphs.get("Z") != cs.z:
        problems.append("recorded Z differs from the cross-section of the complex")
    for name, m in (("p1", cs.p1), ("p2", cs.p2)):
        got = doc.maps.get(name)
        if got is None or dict(got.vmap) != dict(m.vmap) or dict(got.dmap) != dict(m.dmap):
            problems.append(f"recorded {name} differs from the computed projection")
    return problems


_VERIFIERS = {
    "covering": _verify_covering,
    "common-cover": _verify_common,
    "normal-extension": _verify_normal_extension,
    "finite-quotient": _verify_quotient,
    "completion": _verify_completion,
    "obstruction": _verify_obstruction,
    "cross-section": _verify_cross_section,
}
