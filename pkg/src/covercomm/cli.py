"""Command line entry point: ``covercomm <module> <verb> [files] [options]``.

Exit status: 0 success or positive verdict, 1 negative verdict, 2
inconclusive (a search bound was exhausted), 3 malformed input.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .abelian import complete_abelian, equivariant_average, is_out_finite, verify_completion
from .amalgam import (
    cycle_string,
    find_finite_quotient,
    find_normal_extension,
    free_kernel_data,
    obstruction_report,
    quotient_amalgam,
    validate_commensuration,
)
from .certificates import Certificate, read_certificate, sha256_file, verify_certificate
from .covering import analyze_covering, degree_refinement, find_common_cover
from .errors import CovercommError, InvalidMorphism, NoCommonCover, NotVH
from .formats import (
    dump_abelian,
    dump_amalgam,
    dump_commensuration,
    dump_completion,
    dump_complex,
    dump_graph,
    dump_map,
    dump_quotient,
    dump_subgroup,
    dump_subgroup_graph,
    dump_witness,
    read_document,
)
from .stallings import basis, index, intersect, is_normal, normal_core, subgroup_graph
from .vh import analyze_cross_section, commensuration_from_cross_section, cross_section, horizontal_subgraph, vh_partition

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class Context:
    def __init__(self, args, out=sys.stdout):
        self.args = args
        self.out = out

    def say(self, text: str = ""):
        print(text, file=self.out)

    def emit(self, cert: Certificate, stem: str):
        """Print the certificate path (or nothing) and write it when --out is set."""
        if self.args.out is None:
            return
        outdir = Path(self.args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"{stem}.cert"
        path.write_text(cert.render(), encoding="utf-8")
        self.say(f"certificate written to {path}")

    def inputs(self, *paths):
        return [(Path(p).name, sha256_file(p)) for p in paths]

    def params(self, **kw):
        return {k: v for k, v in kw.items() if v is not None}


def threads() -> int:
    """Parallelism cap from COVERCOMM_THREADS (default 1).

    Searches return the canonical certificate regardless, so the value only
    bounds resource use; the current implementation runs searches serially.
    """
    raw = os.environ.get("COVERCOMM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CovercommError(f"COVERCOMM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise CovercommError(f"COVERCOMM_THREADS must be a positive integer, got {raw!r}")
    return n


# cover


def cmd_cover_verify(ctx: Context) -> int:
    path = ctx.args.files[0]
    doc = read_document(path)
    m = doc.only("maps")
    try:
        rep = analyze_covering(m)
    except InvalidMorphism as exc:
        ctx.say("invalid morphism:")
        for v in exc.report.violations:
            ctx.say(f"  {v}")
        return EXIT_NEGATIVE
    if rep.is_covering:
        ctx.say(f"covering: yes, degree {rep.degree if rep.degree is not None else 'undefined (disconnected target)'}")
    else:
        ctx.say("covering: no")
        for v, why in rep.violations:
            ctx.say(f"  vertex {v}: {why}")
    names = {id(g): n for n, g in doc.graphs.items()}
    payload = "".join(dump_graph(g, n) for n, g in doc.graphs.items())
    payload += dump_map(m, names.get(id(m.source), m.source.name), names.get(id(m.target), m.target.name))
    summary = {"is-covering": "yes" if rep.is_covering else "no"}
    if rep.degree is not None:
        summary["degree"] = rep.degree
    ctx.emit(Certificate("covering", payload, inputs=ctx.inputs(path), summary=summary), "covering")
    return EXIT_OK if rep.is_covering else EXIT_NEGATIVE


def cmd_cover_refine(ctx: Context) -> int:
    doc = read_document(ctx.args.files[0])
    g = doc.first("graphs")
    ref = degree_refinement(g)
    ctx.say(f"classes: {len(ref.classes)} (rounds {ref.rounds})")
    for i, cls in enumerate(ref.classes):
        ctx.say(f"  class {i}: {' '.join(cls)}")
    ctx.say("matrix:")
    for row in ref.matrix:
        ctx.say("  " + " ".join(str(x) for x in row))
    return EXIT_OK


def cmd_cover_common(ctx: Context) -> int:
    p1, p2 = ctx.args.files[:2]
    g1 = read_document(p1).first("graphs")
    g2 = read_document(p2).first("graphs")
    bound = ctx.args.max_vertices
    try:
        found = find_common_cover(g1, g2, bound)
    except NoCommonCover as exc:
        ctx.say(f"no common cover exists: {exc}")
        return EXIT_NEGATIVE
    if found is None:
        ctx.say(f"inconclusive: no common cover with at most {bound} vertices")
        return EXIT_INCONCLUSIVE
    z, m1, m2 = found
    r1, r2 = analyze_covering(m1), analyze_covering(m2)
    ctx.say(f"common cover: {len(z.vertices)} vertices, {z.num_edges} edges")
    ctx.say(f"  p1 degree {r1.degree}, p2 degree {r2.degree}")
    payload = dump_graph(g1, "G1") + dump_graph(g2, "G2") + dump_graph(z, "Z")
    payload += dump_map(m1, "Z", "G1", "p1") + dump_map(m2, "Z", "G2", "p2")
    cert = Certificate(
        "common-cover",
        payload,
        params=ctx.params(max_vertices=bound),
        inputs=ctx.inputs(p1, p2),
        summary={"vertices": len(z.vertices), "degree-p1": r1.degree, "degree-p2": r2.degree},
    )
    ctx.emit(cert, "common-cover")
    return EXIT_OK


# stallings


def _subgroups(ctx: Context, need: int):
    graphs = []
    for path in ctx.args.files:
        doc = read_document(path)
        for rank, gens in doc.subgroups.values():
            graphs.append(subgroup_graph(rank, gens))
    if len(graphs) < need:
        raise CovercommError(f"expected {need} subgroup block(s), found {len(graphs)}")
    return graphs


def cmd_stallings(ctx: Context) -> int:
    verb = ctx.args.verb
    if verb == "intersect":
        s, t = _subgroups(ctx, 2)[:2]
        r = intersect(s, t)
        ctx.say(f"index {index(r)}, rank {r.free_rank}")
        ctx.say(dump_subgroup_graph(r, "intersection").rstrip())
        return EXIT_OK
    s = _subgroups(ctx, 1)[0]
    if verb == "index":
        ctx.say(f"index {index(s)}")
        ctx.say(f"vertices {s.n_vertices}, rank {s.free_rank}, complete {'yes' if s.is_complete() else 'no'}")
        return EXIT_OK
    if verb == "normal":
        ok = is_normal(s)
        ctx.say(f"normal: {'yes' if ok else 'no'}")
        return EXIT_OK if ok else EXIT_NEGATIVE
    if verb == "core":
        core = normal_core(s)
        ctx.say(f"core index {index(core)}, rank {core.free_rank}")
        ctx.say(dump_subgroup_graph(core, "core").rstrip())
        return EXIT_OK
    if verb == "basis":
        ctx.say(dump_subgroup(s.rank, basis(s), "basis").rstrip())
        return EXIT_OK
    raise AssertionError(verb)


# comm


def _commensuration(path):
    return read_document(path).first("commensurations")


def cmd_comm(ctx: Context) -> int:
    verb = ctx.args.verb
    path = ctx.args.files[0]
    doc = read_document(path)
    if verb == "finite-quotient" and doc.amalgams:
        return _finite_quotient(ctx, doc.first("amalgams"), path)
    c = doc.first("commensurations")
    rep = validate_commensuration(c)
    if verb == "validate":
        ctx.say(f"valid: {'yes' if rep.valid else 'no'}")
        ctx.say(f"indices: {rep.indices[0]} {rep.indices[1]}")
        ctx.say(f"image ranks: {rep.image_ranks[0]} {rep.image_ranks[1]} (H has rank {c.h_rank})")
        if rep.trivial:
            ctx.say("trivial: one embedding is onto")
        for p in rep.problems:
            ctx.say(f"  {p}")
        return EXIT_OK if rep.valid else EXIT_NEGATIVE
    if not rep.valid:
        ctx.say("invalid commensuration:")
        for p in rep.problems:
            ctx.say(f"  {p}")
        return EXIT_INPUT
    if verb == "obstruct":
        return _obstruct(ctx, c, path)
    nc = find_normal_extension(c, ctx.args.max_index)
    if nc is None:
        ctx.say(f"inconclusive: no simultaneously normal subgroup of index <= {ctx.args.max_index}")
        return EXIT_INCONCLUSIVE
    if verb == "normalize":
        ctx.say(f"normal extension: [H:N] = {nc.index_in_h} after {nc.steps} step(s)")
        ctx.say(dump_subgroup_graph(nc.n_graph, "N").rstrip())
        payload = dump_commensuration(c) + dump_subgroup_graph(nc.n_graph, "N")
        cert = Certificate(
            "normal-extension", payload, params=ctx.params(max_index=ctx.args.max_index),
            inputs=ctx.inputs(path), summary={"index-in-h": nc.index_in_h, "steps": nc.steps},
        )
        ctx.emit(cert, "normal-extension")
        return EXIT_OK
    fa = quotient_amalgam(nc)
    if verb == "quotient":
        a, b, cc = fa.orders
        ctx.say(f"quotient amalgam: |A| = {a}, |B| = {b}, |C| = {cc}")
        ctx.say(dump_amalgam(fa).rstrip())
        return EXIT_OK
    return _finite_quotient(ctx, fa, path)


def _finite_quotient(ctx, fa, path) -> int:
    cert = find_finite_quotient(fa, ctx.args.max_degree, ctx.args.injective)
    if cert is None:
        ctx.say(f"inconclusive: no suitable finite quotient of degree <= {ctx.args.max_degree}")
        return EXIT_INCONCLUSIVE
    ctx.say(f"finite quotient: degree {cert.degree}, image order {cert.image_order}")
    ctx.say("  A -> " + " ".join(cycle_string(p) for p in cert.a_images))
    ctx.say("  B -> " + " ".join(cycle_string(p) for p in cert.b_images))
    ctx.say(f"  injective on factors: {'yes' if cert.injective_on_factors else 'no'}")
    summary = {"degree": cert.degree, "image-order": cert.image_order}
    if cert.injective_on_factors:
        fk = free_kernel_data(fa, cert)
        ctx.say(f"  free kernel rank {fk.kernel_rank}")
        summary["kernel-rank"] = fk.kernel_rank
    out = Certificate(
        "finite-quotient", dump_amalgam(fa) + dump_quotient(cert),
        params=ctx.params(max_degree=ctx.args.max_degree, injective="yes" if ctx.args.injective else None),
        inputs=ctx.inputs(path), summary=summary,
    )
    ctx.emit(out, "finite-quotient")
    return EXIT_OK


def _obstruct(ctx, c, path) -> int:
    rep = obstruction_report(c, ctx.args.max_index, ctx.args.max_degree)
    ctx.say(rep.message)
    for k, v in rep.details.items():
        ctx.say(f"  {k}: {v}")
    payload = dump_commensuration(c)
    if rep.extension is not None:
        payload += dump_subgroup_graph(rep.extension.n_graph, "N")
    if rep.amalgam is not None:
        payload += dump_amalgam(rep.amalgam)
    if rep.certificate is not None:
        payload += dump_quotient(rep.certificate)
    cert = Certificate(
        "obstruction", payload,
        params=ctx.params(max_index=ctx.args.max_index, max_degree=ctx.args.max_degree),
        inputs=ctx.inputs(path), summary={"status": rep.status},
    )
    ctx.emit(cert, "obstruction")
    return EXIT_OK if rep.conclusive else EXIT_INCONCLUSIVE


# vh


def cmd_vh(ctx: Context) -> int:
    verb = ctx.args.verb
    path = ctx.args.files[0]
    sc = read_document(path).first("complexes")
    swap = ctx.args.swap
    part = vh_partition(sc, swap)
    if isinstance(part, NotVH):
        ctx.say(f"not VH: {part.reason}")
        ctx.say(f"  witness: {' '.join(part.witness)}")
        return EXIT_NEGATIVE
    if verb == "partition":
        ctx.say("vertical: " + " ".join(sorted(part.vertical)))
        ctx.say("horizontal: " + " ".join(sorted(part.horizontal)))
        _, comps = horizontal_subgraph(sc, part)
        ctx.say(f"horizontal components: {len(comps)}")
        for i, comp in enumerate(comps):
            ctx.say(f"  X{i + 1}: {' '.join(comp)}")
        return EXIT_OK
    if verb == "cross-section":
        cs = cross_section(sc, part)
        ctx.say(dump_graph(cs.z, "Z").rstrip())
        payload = dump_complex(sc) + dump_graph(cs.z, "Z") + dump_graph(cs.x1, "X1") + dump_graph(cs.x2, "X2")
        payload += dump_map(cs.p1, "Z", "X1", "p1") + dump_map(cs.p2, "Z", "X2", "p2")
        cert = Certificate(
            "cross-section", payload, params=ctx.params(swap="yes" if swap else None),
            inputs=ctx.inputs(path),
            summary={"vertices": len(cs.z.vertices), "edges": cs.z.num_edges},
        )
        ctx.emit(cert, "cross-section")
        return EXIT_OK
    rep = analyze_cross_section(sc, swap)
    cs = rep.cross_section
    if verb == "analyze":
        ctx.say(f"Z: {len(cs.z.vertices)} vertices, {cs.z.num_edges} edges, euler characteristic {rep.euler_characteristic}")
        if rep.free_rank is not None:
            ctx.say(f"Z free rank {rep.free_rank}")
        for i, (r, f) in enumerate(zip(rep.coverings, rep.fold_counts), start=1):
            if r.is_covering:
                ctx.say(f"p{i}: covering of degree {r.degree} (folds {f})")
            else:
                ctx.say(f"p{i}: not a covering (folds {f})")
                for v, why in r.violations:
                    ctx.say(f"  vertex {v}: {why}")
        return EXIT_OK if rep.both_coverings else EXIT_NEGATIVE
    if verb == "commensuration":
        if not rep.both_coverings:
            ctx.say("the projections are not both coverings")
            return EXIT_NEGATIVE
        c = commensuration_from_cross_section(cs, sc.name or "induced")
        ctx.say(dump_commensuration(c).rstrip())
        v = validate_commensuration(c)
        ctx.say(f"# indices {v.indices[0]} {v.indices[1]}")
        return EXIT_OK
    raise AssertionError(verb)


# abelian


def cmd_abelian(ctx: Context) -> int:
    verb = ctx.args.verb
    path = ctx.args.files[0]
    doc = read_document(path)
    cap = ctx.args.cap
    if verb == "average":
        inst = doc.first("averaging")
        res = equivariant_average(inst)
        ctx.say(f"|Γ| = {len(res.gamma)}")
        ctx.say("rho " + " ".join(str(x) for r in res.rho for x in r))
        for k in res.kernel:
            ctx.say("kernel " + " ".join(str(x) for x in k))
        for name, ok in res.checks.items():
            ctx.say(f"check {name}: {'ok' if ok else 'FAILED'}")
        return EXIT_OK if all(res.checks.values()) else EXIT_NEGATIVE
    c = doc.first("abelian")
    if verb == "verify":
        comp = doc.first("completions")
        check = verify_completion(c, comp)
        ctx.say(f"completion: {'valid' if check.ok else 'invalid'}")
        for p in check.problems:
            ctx.say(f"  {p}")
        return EXIT_OK if check.ok else EXIT_NEGATIVE
    verdict = is_out_finite(c, cap)
    cl = verdict.closure
    if verdict.out_finite is None:
        ctx.say(f"inconclusive: no finite-order certificate within cap {cl.cap}")
        return EXIT_INCONCLUSIVE
    if not verdict.out_finite:
        ctx.say("out-finite: no")
        ctx.say(f"witness {cl.word_string()} = {cl.witness}")
        ctx.say(f"witness squared = {cl.witness @ cl.witness}")
        payload = dump_abelian(c) + dump_witness(cl.word_string(), cl.witness)
        cert = Certificate(
            "obstruction", payload, params=ctx.params(cap=cap), inputs=ctx.inputs(path),
            summary={"out-finite": "no"},
        )
        ctx.emit(cert, "obstruction")
        return EXIT_NEGATIVE
    if verb == "outfinite":
        ctx.say(f"out-finite: yes, |Γ| = {cl.order}")
    comp = complete_abelian(c, cap)
    if verb == "complete":
        ctx.say(f"completion: L = (1/{comp.lattice.denom}) span {list(comp.lattice.rows)}, |Γ| = {len(comp.gamma)}")
        ctx.say(f"indices: [K:G1] = {comp.indices[0]}, [K:G2] = {comp.indices[1]}")
    cert = Certificate(
        "completion", dump_abelian(c) + dump_completion(comp, c.d), params=ctx.params(cap=cap),
        inputs=ctx.inputs(path), summary={"gamma-order": len(comp.gamma), "index-1": comp.indices[0], "index-2": comp.indices[1]},
    )
    ctx.emit(cert, "completion")
    return EXIT_OK


def cmd_verify(ctx: Context) -> int:
    cert = read_certificate(ctx.args.files[0])
    res = verify_certificate(cert, ctx.args.files[1:])
    if cert.version != __version__:
        ctx.say(f"note: certificate written by version {cert.version}, checking with {__version__}")
    ctx.say(f"{cert.kind} certificate: {'verified' if res.ok else 'REJECTED'}")
    for p in res.problems:
        ctx.say(f"  {p}")
    return EXIT_OK if res.ok else EXIT_NEGATIVE


COMMANDS = {
    "cover": ({"verify": 1, "refine": 1, "common": 2}, None),
    "stallings": ({"index": 1, "core": 1, "normal": 1, "intersect": 1, "basis": 1}, cmd_stallings),
    "comm": ({"validate": 1, "normalize": 1, "quotient": 1, "finite-quotient": 1, "obstruct": 1}, cmd_comm),
    "vh": ({"partition": 1, "cross-section": 1, "analyze": 1, "commensuration": 1}, cmd_vh),
    "abelian": ({"outfinite": 1, "complete": 1, "verify": 1, "average": 1}, cmd_abelian),
}
COVER = {"verify": cmd_cover_verify, "refine": cmd_cover_refine, "common": cmd_cover_common}


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-vertices", type=positive_int, default=100, help="vertex bound for common-cover search")
    common.add_argument("--max-index", type=positive_int, default=64, help="bound on [H:N] for normal extensions")
    common.add_argument("--max-degree", type=positive_int, default=6, help="degree bound for finite quotients")
    common.add_argument("--cap", type=positive_int, default=None, help="order cap for matrix group closures")
    common.add_argument("--out", default=None, help="directory for certificate files")
    common.add_argument("--injective", action="store_true", help="finite quotients must be injective on both factors")
    common.add_argument("--swap", action="store_true", help="exchange the vertical and horizontal classes")

    parser = argparse.ArgumentParser(prog="covercomm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"covercomm {__version__}")
    sub = parser.add_subparsers(dest="module", required=True)
    for module, (verbs, _) in COMMANDS.items():
        mp = sub.add_parser(module)
        vs = mp.add_subparsers(dest="verb", required=True)
        for verb in verbs:
            vp = vs.add_parser(verb, parents=[common])
            vp.add_argument("files", nargs="+")
    vp = sub.add_parser("verify", parents=[common], help="re-check a certificate")
    vp.add_argument("files", nargs="+", metavar="file", help="certificate, then optional input files to match digests")
    return parser


def run(argv=None, out=sys.stdout) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    ctx = Context(args, out)
    try:
        threads()
        if args.module == "verify":
            return cmd_verify(ctx)
        verbs, handler = COMMANDS[args.module]
        if len(args.files) < verbs[args.verb]:
            ctx.say(f"error: {args.module} {args.verb} needs {verbs[args.verb]} file(s)")
            return EXIT_INPUT
        if args.module == "cover":
            return COVER[args.verb](ctx)
        return handler(ctx)
    except CovercommError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
