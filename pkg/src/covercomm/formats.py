"""Line-oriented text formats for every input and output object.

A document is a sequence of blocks.  Each block starts with a header line
(``graph``, ``map``, ``subgroup``, ``commensuration``, ``complex``,
``abelian-commensuration``, ``completion``, ``averaging``, ``amalgam``,
``quotient``, ``witness``) followed by its body lines.  ``#`` starts a
comment.  Permutations are written as comma-separated 1-based images, e.g.
``2,1,3``; matrices as row-major integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .abelian import AbelianCommensuration, AbelianCompletion, AveragingInstance, IntMatrix, Lattice, parse_matrix
from .amalgam import Commensuration, FiniteAmalgam, FiniteQuotientCertificate
from .errors import CovercommError, ParseError
from .graph import Graph, GraphMorphism, build_graph
from .stallings import SubgroupGraph, basis, parse_word, subgroup_graph
from .vh import SquareComplex, build_complex

HEADERS = (
    "graph",
    "map",
    "subgroup",
    "commensuration",
    "complex",
    "abelian-commensuration",
    "completion",
    "averaging",
    "amalgam",
    "quotient",
    "witness",
)


@dataclass
class Token:
    text: str
    line: int
    column: int


@dataclass
class Line:
    tokens: list

    @property
    def key(self) -> str:
        return self.tokens[0].text

    @property
    def args(self) -> list:
        return self.tokens[1:]

    @property
    def number(self) -> int:
        return self.tokens[0].line


@dataclass
class Block:
    kind: str
    name: str
    header: Line
    body: list = field(default_factory=list)


def tokenize(text: str) -> list:
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        toks = []
        col = 0
        while col < len(content):
            if content[col].isspace():
                col += 1
                continue
            start = col
            while col < len(content) and not content[col].isspace():
                col += 1
            toks.append(Token(content[start:col], n, start + 1))
        if toks:
            out.append(Line(toks))
    return out


def split_blocks(text: str, source: Optional[str] = None) -> list:
    blocks = []
    for line in tokenize(text):
        if line.key in HEADERS:
            name = line.args[0].text if line.args else ""
            blocks.append(Block(line.key, name, line))
        elif not blocks:
            t = line.tokens[0]
            raise ParseError(f"expected a block header, found {t.text!r}", t.line, t.column, source)
        else:
            blocks[-1].body.append(line)
    return blocks


class _Reader:
    def __init__(self, source):
        self.source = source

    def fail(self, tok: Token, msg: str):
        raise ParseError(msg, tok.line, tok.column, self.source)

    def nargs(self, line: Line, lo: int, hi: Optional[int] = None):
        n = len(line.args)
        hi = lo if hi is None else hi
        if n < lo or (hi >= 0 and n > hi):
            want = str(lo) if lo == hi else f"{lo}-{hi}" if hi >= 0 else f"at least {lo}"
            self.fail(line.tokens[0], f"'{line.key}' takes {want} argument(s), got {n}")

    def int(self, tok: Token) -> int:
        try:
            return int(tok.text)
        except ValueError:
            self.fail(tok, f"expected an integer, found {tok.text!r}")

    def ints(self, toks) -> list:
        return [self.int(t) for t in toks]

    def perm(self, tok: Token) -> tuple:
        try:
            vals = [int(x) - 1 for x in tok.text.split(",")]
        except ValueError:
            self.fail(tok, f"expected a permutation like 2,1,3, found {tok.text!r}")
        if sorted(vals) != list(range(len(vals))):
            self.fail(tok, f"{tok.text!r} is not a permutation of 1..{len(vals)}")
        return tuple(vals)

    def wrap(self, tok: Token, exc: CovercommError):
        if isinstance(exc, ParseError):
            raise exc
        self.fail(tok, str(exc))


def _graph_from(block: Block, r: _Reader, extra=()) -> tuple:
    vertices, edges, rest = [], [], []
    edge_lines = []
    for line in block.body:
        if line.key == "vertex":
            r.nargs(line, 1)
            if line.args[0].text in vertices:
                r.fail(line.args[0], f"duplicate vertex {line.args[0].text}")
            vertices.append(line.args[0].text)
        elif line.key == "edge":
            r.nargs(line, 3, 4)
            edges.append(tuple(t.text for t in line.args))
            edge_lines.append(line)
        elif line.key in extra:
            rest.append(line)
        else:
            r.fail(line.tokens[0], f"unknown line '{line.key}' in {block.kind} block")
    known = set(vertices)
    for line in edge_lines:
        for t in line.args[1:3]:
            if t.text not in known:
                r.fail(t, f"edge {line.args[0].text} has dangling endpoint {t.text}")
    try:
        g = build_graph(vertices, edges, name=block.name)
    except CovercommError as exc:
        r.wrap(block.header.tokens[0], exc)
    return g, rest


@dataclass
class Document:
    graphs: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    subgroups: dict = field(default_factory=dict)
    commensurations: dict = field(default_factory=dict)
    complexes: dict = field(default_factory=dict)
    abelian: dict = field(default_factory=dict)
    completions: dict = field(default_factory=dict)
    averaging: dict = field(default_factory=dict)
    amalgams: dict = field(default_factory=dict)
    quotients: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    def only(self, attr: str):
        items = getattr(self, attr)
        if len(items) != 1:
            raise ParseError(f"expected exactly one {attr[:-1] if attr.endswith('s') else attr} block, found {len(items)}")
        return next(iter(items.values()))

    def first(self, attr: str):
        items = getattr(self, attr)
        if not items:
            raise ParseError(f"no {attr} block found")
        return next(iter(items.values()))


def parse_document(text: str, source: Optional[str] = None, graphs: Optional[dict] = None) -> Document:
    """Parse every block; maps may refer to graphs defined here or in ``graphs``."""
    r = _Reader(source)
    doc = Document()
    known = dict(graphs or {})
    for block in split_blocks(text, source):
        head = block.header
        k = block.kind
        if k == "graph":
            r.nargs(head, 0, 1)
            g, _ = _graph_from(block, r)
            doc.graphs[block.name] = known[block.name] = g
        elif k == "map":
            r.nargs(head, 3)
            name, src, dst = (t.text for t in head.args)
            for t in head.args[1:]:
                if t.text not in known:
                    r.fail(t, f"unknown graph {t.text!r}")
            vmap, dmap = {}, {}
            for line in block.body:
                if line.key not in ("vmap", "dmap"):
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in map block")
                r.nargs(line, 2)
                table = vmap if line.key == "vmap" else dmap
                table[line.args[0].text] = line.args[1].text
            doc.maps[name] = GraphMorphism(known[src], known[dst], vmap, dmap, name)
        elif k == "subgroup":
            r.nargs(head, 0, 1)
            rank, gens = None, []
            for line in block.body:
                if line.key == "ambient":
                    r.nargs(line, 1)
                    rank = r.int(line.args[0])
                elif line.key == "gen":
                    r.nargs(line, 1, -1)
                    gens.extend(line.args)
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in subgroup block")
            if rank is None:
                r.fail(head.tokens[0], "subgroup block needs an 'ambient' line")
            words = []
            for t in gens:
                try:
                    words.append(parse_word(t.text, rank))
                except CovercommError as exc:
                    r.wrap(t, exc)
            doc.subgroups[block.name] = (rank, words)
        elif k == "commensuration":
            r.nargs(head, 0, 1)
            vals = {"h-rank": None, "g1-rank": None, "g2-rank": None}
            imgs = {"i1": [], "i2": []}
            for line in block.body:
                if line.key in vals:
                    r.nargs(line, 1)
                    vals[line.key] = r.int(line.args[0])
                elif line.key in imgs:
                    r.nargs(line, 1, -1)
                    imgs[line.key].extend(line.args)
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in commensuration block")
            for key, v in vals.items():
                if v is None:
                    r.fail(head.tokens[0], f"commensuration block needs a '{key}' line")
            try:
                doc.commensurations[block.name] = Commensuration(
                    vals["h-rank"], vals["g1-rank"], vals["g2-rank"],
                    tuple(t.text for t in imgs["i1"]), tuple(t.text for t in imgs["i2"]), block.name,
                )
            except CovercommError as exc:
                bad = _first_bad_word(imgs, vals) or head.tokens[0]
                r.wrap(bad, exc)
        elif k == "complex":
            r.nargs(head, 0, 1)
            g, rest = _graph_from(block, r, extra=("square", "relator"))
            squares, relators = [], []
            for line in rest:
                if line.key == "square":
                    r.nargs(line, 4)
                    squares.append(tuple(t.text for t in line.args))
                else:
                    r.nargs(line, 1)
                    relators.append(line.args[0].text)
            try:
                doc.complexes[block.name] = build_complex(g, squares, relators)
            except CovercommError as exc:
                r.wrap(head.tokens[0], exc)
        elif k == "abelian-commensuration":
            r.nargs(head, 0, 1)
            d, ms, ps = None, {}, {"p1": [], "p2": []}
            for line in block.body:
                if line.key == "dim":
                    r.nargs(line, 1)
                    d = r.int(line.args[0])
                elif line.key in ("m1", "m2", "p1", "p2"):
                    if d is None:
                        r.fail(line.tokens[0], "'dim' must come before matrices")
                    r.nargs(line, d * d)
                    m = _matrix(r, line, d)
                    if line.key in ms:
                        r.fail(line.tokens[0], f"duplicate '{line.key}' line")
                    if line.key.startswith("m"):
                        ms[line.key] = m
                    else:
                        ps[line.key].append(m)
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in abelian-commensuration block")
            if d is None or "m1" not in ms or "m2" not in ms:
                r.fail(head.tokens[0], "abelian-commensuration needs 'dim', 'm1' and 'm2' lines")
            doc.abelian[block.name] = AbelianCommensuration(d, ms["m1"], ms["m2"], tuple(ps["p1"]), tuple(ps["p2"]), block.name)
        elif k == "completion":
            r.nargs(head, 0, 1)
            d = None
            fields = {"gamma": [], "lattice": [], "denom": None, "j1": None, "j2": None, "indices": None}
            for line in block.body:
                if line.key == "dim":
                    r.nargs(line, 1)
                    d = r.int(line.args[0])
                elif line.key == "denom":
                    r.nargs(line, 1)
                    fields["denom"] = r.int(line.args[0])
                elif line.key == "indices":
                    r.nargs(line, 2)
                    fields["indices"] = tuple(_rational(r, t) for t in line.args)
                elif line.key in ("gamma", "j1", "j2", "lattice"):
                    if d is None:
                        r.fail(line.tokens[0], "'dim' must come first")
                    if line.key == "lattice":
                        r.nargs(line, d)
                        fields["lattice"].append(tuple(r.ints(line.args)))
                    else:
                        r.nargs(line, d * d)
                        m = _matrix(r, line, d)
                        if line.key == "gamma":
                            fields["gamma"].append(m)
                        else:
                            fields[line.key] = m
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in completion block")
            for key in ("denom", "j1", "j2", "indices"):
                if fields[key] is None:
                    r.fail(head.tokens[0], f"completion block needs a '{key}' line")
            lat = Lattice(fields["denom"], tuple(fields["lattice"]))
            doc.completions[block.name] = AbelianCompletion(
                lat, tuple(fields["gamma"]), fields["j1"], fields["j2"], fields["indices"]
            )
        elif k == "averaging":
            r.nargs(head, 0, 1)
            free, torsion, gammas, zs, rho0 = None, (), [], [], None
            for line in block.body:
                if line.key == "free-rank":
                    r.nargs(line, 1)
                    free = r.int(line.args[0])
                elif line.key == "torsion":
                    torsion = tuple(r.ints(line.args))
                    for t, v in zip(line.args, torsion):
                        if v < 2:
                            r.fail(t, "torsion orders must be at least 2")
                elif line.key in ("gamma", "rho0", "z"):
                    if free is None:
                        r.fail(line.tokens[0], "'free-rank' must come first")
                    n = free + len(torsion)
                    if line.key == "z":
                        r.nargs(line, n)
                        zs.append(tuple(r.ints(line.args)))
                    else:
                        r.nargs(line, n * n)
                        vals = r.ints(line.args)
                        m = tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n))
                        if line.key == "gamma":
                            gammas.append(m)
                        else:
                            rho0 = m
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in averaging block")
            if free is None or rho0 is None:
                r.fail(head.tokens[0], "averaging block needs 'free-rank' and 'rho0' lines")
            doc.averaging[block.name] = AveragingInstance(free, torsion, tuple(gammas), tuple(zs), rho0)
        elif k == "amalgam":
            r.nargs(head, 0, 1)
            a, b, ca, cb = [], [], [], []
            for line in block.body:
                if line.key in ("a", "b"):
                    r.nargs(line, 1)
                    (a if line.key == "a" else b).append(r.perm(line.args[0]))
                elif line.key == "c":
                    r.nargs(line, 2)
                    ca.append(r.perm(line.args[0]))
                    cb.append(r.perm(line.args[1]))
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in amalgam block")
            try:
                doc.amalgams[block.name] = FiniteAmalgam(tuple(a), tuple(b), tuple(ca), tuple(cb))
            except CovercommError as exc:
                r.wrap(head.tokens[0], exc)
        elif k == "quotient":
            r.nargs(head, 0, 1)
            deg, qa, qb, order, inj = None, [], [], None, None
            for line in block.body:
                if line.key == "degree":
                    r.nargs(line, 1)
                    deg = r.int(line.args[0])
                elif line.key in ("qa", "qb"):
                    r.nargs(line, 1)
                    (qa if line.key == "qa" else qb).append(r.perm(line.args[0]))
                elif line.key == "image-order":
                    r.nargs(line, 1)
                    order = r.int(line.args[0])
                elif line.key == "injective":
                    r.nargs(line, 1)
                    if line.args[0].text not in ("yes", "no"):
                        r.fail(line.args[0], "expected yes or no")
                    inj = line.args[0].text == "yes"
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in quotient block")
            if deg is None or order is None or inj is None:
                r.fail(head.tokens[0], "quotient block needs 'degree', 'image-order' and 'injective' lines")
            doc.quotients[block.name] = FiniteQuotientCertificate(deg, tuple(qa), tuple(qb), order, inj)
        elif k == "witness":
            r.nargs(head, 0, 1)
            word, mat, d = None, None, None
            for line in block.body:
                if line.key == "dim":
                    r.nargs(line, 1)
                    d = r.int(line.args[0])
                elif line.key == "word":
                    r.nargs(line, 1)
                    word = line.args[0].text
                elif line.key == "matrix":
                    if d is None:
                        r.fail(line.tokens[0], "'dim' must come first")
                    r.nargs(line, d * d)
                    mat = _matrix(r, line, d)
                else:
                    r.fail(line.tokens[0], f"unknown line '{line.key}' in witness block")
            if word is None or mat is None:
                r.fail(head.tokens[0], "witness block needs 'word' and 'matrix' lines")
            doc.witnesses[block.name] = (word, mat)
    return doc


def _first_bad_word(imgs, vals):
    for key, rank_key in (("i1", "g1-rank"), ("i2", "g2-rank")):
        for t in imgs[key]:
            try:
                parse_word(t.text, vals[rank_key])
            except CovercommError:
                return t
    return None


def _matrix(r: _Reader, line: Line, d: int) -> IntMatrix:
    try:
        return parse_matrix(r.ints(line.args), d)
    except CovercommError as exc:
        r.wrap(line.tokens[0], exc)


def _rational(r: _Reader, tok: Token):
    try:
        v = Fraction(tok.text)
    except ValueError:
        r.fail(tok, f"expected a number, found {tok.text!r}")
    return int(v) if v.denominator == 1 else v


def read_document(path, graphs: Optional[dict] = None) -> Document:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", source=str(path)) from None
    except UnicodeDecodeError:
        raise ParseError("file is not valid UTF-8", source=str(path)) from None
    return parse_document(text, str(path), graphs)


# writers


def dump_graph(g: Graph, name: Optional[str] = None) -> str:
    name = name if name is not None else g.name
    lines = [f"graph {name}".rstrip()]
    lines += [f"vertex {v}" for v in g.vertices]
    for e, src, dst, lab in g.edges():
        lines.append(f"edge {e} {src} {dst}" + (f" {lab}" if lab is not None else ""))
    return "\n".join(lines) + "\n"


def dump_map(m: GraphMorphism, src_name: str, dst_name: str, name: Optional[str] = None) -> str:
    lines = [f"map {name or m.name or 'f'} {src_name} {dst_name}"]
    lines += [f"vmap {v} {m.vmap[v]}" for v in m.source.vertices if v in m.vmap]
    lines += [f"dmap {d} {m.dmap[d]}" for d in m.source.darts if d in m.dmap]
    return "\n".join(lines) + "\n"


def dump_subgroup(rank: int, gens, name: str = "S") -> str:
    lines = [f"subgroup {name}", f"ambient {rank}"]
    lines += [f"gen {w or '1'}" for w in gens]
    return "\n".join(lines) + "\n"


def dump_subgroup_graph(s: SubgroupGraph, name: str = "S") -> str:
    return dump_subgroup(s.rank, basis(s), name)


def dump_commensuration(c: Commensuration, name: Optional[str] = None) -> str:
    lines = [f"commensuration {name or c.name or 'C'}", f"h-rank {c.h_rank}", f"g1-rank {c.g1_rank}", f"g2-rank {c.g2_rank}"]
    lines += [f"i1 {w or '1'}" for w in c.i1_images]
    lines += [f"i2 {w or '1'}" for w in c.i2_images]
    return "\n".join(lines) + "\n"


def dump_complex(sc: SquareComplex, name: Optional[str] = None) -> str:
    body = dump_graph(sc.skeleton).splitlines()[1:]
    lines = [f"complex {name or sc.name}".rstrip()] + body
    lines += ["square " + " ".join(sq) for sq in sc.squares]
    return "\n".join(lines) + "\n"


def _mat(m: IntMatrix) -> str:
    return " ".join(str(x) for r in m.rows for x in r)


def dump_abelian(c: AbelianCommensuration, name: Optional[str] = None) -> str:
    lines = [f"abelian-commensuration {name or c.name}".rstrip(), f"dim {c.d}", f"m1 {_mat(c.m1)}", f"m2 {_mat(c.m2)}"]
    lines += [f"p1 {_mat(a)}" for a in c.p1]
    lines += [f"p2 {_mat(a)}" for a in c.p2]
    return "\n".join(lines) + "\n"


def dump_completion(comp: AbelianCompletion, d: int, name: str = "K") -> str:
    lines = [f"completion {name}", f"dim {d}", f"denom {comp.lattice.denom}"]
    lines += ["lattice " + " ".join(str(x) for x in r) for r in comp.lattice.rows]
    lines += [f"gamma {_mat(g)}" for g in comp.gamma]
    lines += [f"j1 {_mat(comp.j1)}", f"j2 {_mat(comp.j2)}"]
    lines.append("indices " + " ".join(str(x) for x in comp.indices))
    return "\n".join(lines) + "\n"


def dump_witness(word: str, m: IntMatrix, name: str = "w") -> str:
    return f"witness {name}\ndim {m.d}\nword {word}\nmatrix {_mat(m)}\n"


def perm_text(p: tuple) -> str:
    return ",".join(str(x + 1) for x in p)


def dump_amalgam(fa: FiniteAmalgam, name: str = "A") -> str:
    lines = [f"amalgam {name}"]
    lines += [f"a {perm_text(p)}" for p in fa.a_gens]
    lines += [f"b {perm_text(p)}" for p in fa.b_gens]
    lines += [f"c {perm_text(x)} {perm_text(y)}" for x, y in zip(fa.c_in_a, fa.c_in_b)]
    return "\n".join(lines) + "\n"


def dump_quotient(q: FiniteQuotientCertificate, name: str = "F") -> str:
    lines = [f"quotient {name}", f"degree {q.degree}"]
    lines += [f"qa {perm_text(p)}" for p in q.a_images]
    lines += [f"qb {perm_text(p)}" for p in q.b_images]
    lines += [f"image-order {q.image_order}", f"injective {'yes' if q.injective_on_factors else 'no'}"]
    return "\n".join(lines) + "\n"


def dump_averaging(inst: AveragingInstance, name: str = "M") -> str:
    def flat(m):
        return " ".join(str(x) for r in m for x in r)

    lines = [f"averaging {name}", f"free-rank {inst.free_rank}"]
    if inst.torsion:
        lines.append("torsion " + " ".join(str(t) for t in inst.torsion))
    lines += [f"gamma {flat(g)}" for g in inst.gamma_gens]
    lines += ["z " + " ".join(str(x) for x in z) for z in inst.z_gens]
    lines.append(f"rho0 {flat(inst.rho0)}")
    return "\n".join(lines) + "\n"


def subgroup_from_document(doc: Document, name: Optional[str] = None) -> SubgroupGraph:
    rank, gens = doc.subgroups[name] if name is not None else doc.first("subgroups")
    return subgroup_graph(rank, gens)
