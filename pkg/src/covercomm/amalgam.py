"""Commensurations of free groups and the amalgams they define.

A commensuration ``G1 <- H -> G2`` of free groups is given by the images of a
basis of ``H``.  This module checks such data, searches for a finite-index
``N <= H`` whose images are normal on both sides, forms the finite quotient
amalgam ``(G1/N) *_{H/N} (G2/N)``, and looks for finite quotients of that
amalgam.  Finite groups are permutation groups on ``range(n)``; products
compose left to right (``p * q`` applies ``p`` first).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

from .errors import InputError
from .graph import Graph, build_graph, free_rank
from .stallings import (
    SubgroupGraph,
    basis,
    coset_action,
    express,
    from_permutations,
    generators,
    index,
    intersect,
    inverse,
    is_normal,
    multiply,
    normal_core,
    parse_word,
    preimage,
    schreier_representatives,
    subgroup_graph,
    substitute,
)


@dataclass(frozen=True)
class Commensuration:
    h_rank: int
    g1_rank: int
    g2_rank: int
    i1_images: tuple
    i2_images: tuple
    name: str = ""

    def __post_init__(self):
        for side, images, rank in ((1, self.i1_images, self.g1_rank), (2, self.i2_images, self.g2_rank)):
            if len(images) != self.h_rank:
                raise InputError(f"i{side} lists {len(images)} images for an H of rank {self.h_rank}")
            object.__setattr__(
                self, f"i{side}_images", tuple(parse_word(w, rank) for w in images)
            )

    def images(self, side: int) -> tuple:
        return self.i1_images if side == 1 else self.i2_images

    def factor_rank(self, side: int) -> int:
        return self.g1_rank if side == 1 else self.g2_rank

    @cached_property
    def image1(self) -> SubgroupGraph:
        return subgroup_graph(self.g1_rank, self.i1_images)

    @cached_property
    def image2(self) -> SubgroupGraph:
        return subgroup_graph(self.g2_rank, self.i2_images)

    def image(self, side: int) -> SubgroupGraph:
        return self.image1 if side == 1 else self.image2

    @property
    def indices(self) -> tuple:
        return (index(self.image1), index(self.image2))


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    indices: tuple
    image_ranks: tuple
    trivial: bool
    problems: tuple = ()


def validate_commensuration(c: Commensuration) -> ValidationReport:
    """Check injectivity (image rank equals ``h_rank``) and finiteness of both indices."""
    problems = []
    ranks = []
    for side in (1, 2):
        s = c.image(side)
        ranks.append(s.free_rank)
        if s.free_rank != c.h_rank:
            msg = f"i{side} is not injective: image rank {s.free_rank} != {c.h_rank}"
            if s.kernel_witnesses:
                msg += f" (kernel element {s.kernel_witnesses[0]})"
            problems.append(msg)
        if not s.is_complete():
            problems.append(f"i{side}(H) has infinite index in G{side}")
    idx = c.indices
    valid = not problems
    trivial = valid and 1 in idx
    return ValidationReport(valid, idx, tuple(ranks), trivial, tuple(problems))


def _require_valid(c: Commensuration):
    rep = validate_commensuration(c)
    if not rep.valid:
        raise InputError("invalid commensuration: " + "; ".join(rep.problems))
    return rep


@dataclass(frozen=True)
class NormalCommensuration:
    base: Commensuration
    n_graph: SubgroupGraph
    image1: SubgroupGraph
    image2: SubgroupGraph
    steps: int = 0

    @property
    def n_basis(self) -> list:
        return basis(self.n_graph)

    @property
    def index_in_h(self) -> int:
        return index(self.n_graph)


def _image_of(c: Commensuration, n: SubgroupGraph, side: int) -> SubgroupGraph:
    return subgroup_graph(c.factor_rank(side), [substitute(w, c.images(side)) for w in basis(n)])


def normal_commensuration(c: Commensuration, n: SubgroupGraph, steps: int = 0) -> NormalCommensuration:
    """Package ``N <= H`` after checking finite index and normality of both images."""
    _require_valid(c)
    if n.rank != c.h_rank or not n.is_complete():
        raise InputError("N must be a finite-index subgroup of H")
    images = []
    for side in (1, 2):
        img = _image_of(c, n, side)
        if not is_normal(img):
            raise InputError(f"i{side}(N) is not normal in G{side}")
        images.append(img)
    return NormalCommensuration(c, n, images[0], images[1], steps)


def find_normal_extension(c: Commensuration, max_index: int) -> Optional[NormalCommensuration]:
    """Largest finite-index ``N <= H`` with both images normal, or None past the bound.

    Iterates ``N <- N ∩ i1^-1(core i1(N)) ∩ i2^-1(core i2(N))`` from ``N = H``.
    Each step only removes elements outside every simultaneously normal
    subgroup, so the fixed point is the maximal one.  None means the bound on
    ``[H:N]`` was exceeded, which is inconclusive rather than a proof that no
    such N exists.
    """
    _require_valid(c)
    trivial_action = {x: (0,) for x in generators(c.h_rank)}
    n = from_permutations(c.h_rank, trivial_action)
    steps = 0
    while True:
        nxt = n
        for side in (1, 2):
            core = normal_core(_image_of(c, n, side))
            nxt = intersect(nxt, preimage(core, c.images(side), c.h_rank))
        if nxt == n:
            return normal_commensuration(c, n, steps)
        n = nxt
        steps += 1
        if index(n) > max_index:
            return None


@dataclass(frozen=True)
class NormalForm:
    """``i1(carry) * r_1 * r_2 * ... `` with ``r_k`` non-trivial coset representatives.

    ``syllables`` alternate between the factors; ``carry`` is a word in the
    basis of H.
    """

    carry: str
    syllables: tuple

    def __len__(self):
        return len(self.syllables)


def amalgam_normal_form(c: Commensuration, syllables: Sequence[tuple]) -> NormalForm:
    """Reduce ``(factor, word)`` syllables to the canonical normal form.

    Right cosets ``i_f(H) x`` are represented by the Schreier representatives
    of the image subgroup graphs.  The element ``g`` is rewritten right to
    left as ``g = L * h * R`` with ``h`` in H carried leftwards.
    """
    _require_valid(c)
    reps = {side: schreier_representatives(c.image(side)) for side in (1, 2)}
    carry = ""
    out = []
    for side, word in reversed(list(syllables)):
        if side not in (1, 2):
            raise InputError(f"factor must be 1 or 2, got {side!r}")
        try:
            w = parse_word(word, c.factor_rank(side))
        except InputError as exc:
            raise InputError(f"syllable {word!r} is not a word of G{side}: {exc}") from None
        x = multiply(w, substitute(carry, c.images(side)))
        if out and out[0][0] == side:
            x = multiply(x, out.pop(0)[1])
        img = c.image(side)
        r = reps[side][img.read(x)]
        carry = express(img, multiply(x, inverse(r)))
        if r:
            out.insert(0, (side, r))
    return NormalForm(carry, tuple(out))


# finite permutation groups


def perm_mul(p: tuple, q: tuple) -> tuple:
    """Apply ``p`` then ``q``."""
    return tuple(q[i] for i in p)


def perm_inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def identity_perm(n: int) -> tuple:
    return tuple(range(n))


def perm_closure(gens: Sequence[tuple], degree: int) -> set:
    e = identity_perm(degree)
    seen = {e}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = perm_mul(g, s)
            if h not in seen:
                seen.add(h)
                queue.append(h)
    return seen


def perm_order(p: tuple) -> int:
    out, seen = 1, set()
    for i in range(len(p)):
        if i in seen:
            continue
        n, j = 0, i
        while j not in seen:
            seen.add(j)
            j = p[j]
            n += 1
        out = out * n // math.gcd(out, n)
    return out


def cycle_string(p: tuple) -> str:
    """1-based cycle notation, ``()`` for the identity."""
    parts, seen = [], set()
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(str(j + 1))
            j = p[j]
        parts.append("(" + " ".join(cyc) + ")")
    return "".join(parts) or "()"


@dataclass(frozen=True)
class FiniteAmalgam:
    """``A *_C B`` for permutation groups A and B; C is given by generator images in both."""

    a_gens: tuple
    b_gens: tuple
    c_in_a: tuple
    c_in_b: tuple

    def __post_init__(self):
        if len(self.c_in_a) != len(self.c_in_b):
            raise InputError("C must have the same number of generator images in A and B")
        ca = self.c_elements_a
        if not ca <= self.a_elements or not self.c_elements_b <= self.b_elements:
            raise InputError("C generator images must lie in the factors")
        # the generator correspondence must extend to an isomorphism of the two copies of C
        if _extend_hom(self.c_in_a, self.c_in_b, self.a_degree, self.b_degree) is None:
            raise InputError("the two copies of C are not identified by a homomorphism")
        if len(ca) != len(self.c_elements_b):
            raise InputError("the two copies of C have different orders")

    @property
    def a_degree(self) -> int:
        return len(self.a_gens[0]) if self.a_gens else len(self.c_in_a[0]) if self.c_in_a else 1

    @property
    def b_degree(self) -> int:
        return len(self.b_gens[0]) if self.b_gens else len(self.c_in_b[0]) if self.c_in_b else 1

    @cached_property
    def a_elements(self) -> set:
        return perm_closure(self.a_gens, self.a_degree)

    @cached_property
    def b_elements(self) -> set:
        return perm_closure(self.b_gens, self.b_degree)

    @cached_property
    def c_elements_a(self) -> set:
        return perm_closure(self.c_in_a, self.a_degree)

    @cached_property
    def c_elements_b(self) -> set:
        return perm_closure(self.c_in_b, self.b_degree)

    @property
    def orders(self) -> tuple:
        return (len(self.a_elements), len(self.b_elements), len(self.c_elements_a))


def _extend_hom(gens: Sequence[tuple], images: Sequence[tuple], src_degree: int, dst_degree: int):
    """Extend ``gens[k] -> images[k]`` to a homomorphism on the generated group.

    Returns the element map, or None when the assignment is not a homomorphism.
    """
    e = identity_perm(src_degree)
    phi = {e: identity_perm(dst_degree)}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        for s, t in zip(gens, images):
            h = perm_mul(g, s)
            img = perm_mul(phi[g], t)
            if h in phi:
                if phi[h] != img:
                    return None
            else:
                phi[h] = img
                queue.append(h)
    return phi


def quotient_amalgam(nc: NormalCommensuration) -> FiniteAmalgam:
    """``(G1/N) *_{H/N} (G2/N)`` via the regular coset actions of the normal images."""
    c = nc.base
    factors = []
    for side, img in ((1, nc.image1), (2, nc.image2)):
        if not is_normal(img):
            raise InputError(f"i{side}(N) is not normal in G{side}")
        action = coset_action(img)
        gens = tuple(action[x] for x in generators(c.factor_rank(side)))
        c_imgs = tuple(tuple(img.read(w, v) for v in range(img.n_vertices)) for w in c.images(side))
        factors.append((gens, c_imgs))
    fa = FiniteAmalgam(factors[0][0], factors[1][0], factors[0][1], factors[1][1])
    if fa.orders[2] != nc.index_in_h:
        raise InputError("H/N embeds with the wrong order; N is not normal in H")
    return fa


@dataclass(frozen=True)
class FiniteQuotientCertificate:
    degree: int
    a_images: tuple
    b_images: tuple
    image_order: int
    injective_on_factors: bool


def _homs(gens: Sequence[tuple], degree: int, target: int):
    """Homomorphisms from the group generated by ``gens`` to Sym(target), in lex order."""
    perms = list(itertools.permutations(range(target)))
    choices = []
    for g in gens:
        k = perm_order(g)
        choices.append([p for p in perms if k % perm_order(p) == 0])
    for imgs in itertools.product(*choices):
        phi = _extend_hom(gens, imgs, degree, target)
        if phi is not None:
            yield imgs, phi


def _is_regular(group: set, degree: int) -> bool:
    if len(group) != degree:
        return False
    return len({g[0] for g in group}) == degree


def find_finite_quotient(
    fa: FiniteAmalgam, max_degree: int, require_injective_on_factors: bool = False
) -> Optional[FiniteQuotientCertificate]:
    """First pair of permutation representations of A and B agreeing on C.

    Degrees are tried in increasing order, then image tuples lexicographically.
    The image must be non-trivial.  With ``require_injective_on_factors`` the
    image group F must act regularly, both factors must embed, and
    ``phi(A) ∩ phi(B) = phi(C)``; the kernel is then a free normal subgroup
    of finite index (see :func:`free_kernel_data`).
    """
    na, nb, nc = fa.orders
    for d in range(1, max_degree + 1):
        b_homs = list(_homs(fa.b_gens, fa.b_degree, d))
        for a_imgs, phi_a in _homs(fa.a_gens, fa.a_degree, d):
            c_target = tuple(phi_a[x] for x in fa.c_in_a)
            if require_injective_on_factors and len(set(phi_a.values())) != na:
                continue
            for b_imgs, phi_b in b_homs:
                if tuple(phi_b[x] for x in fa.c_in_b) != c_target:
                    continue
                if require_injective_on_factors and len(set(phi_b.values())) != nb:
                    continue
                image = perm_closure(a_imgs + b_imgs, d)
                if len(image) == 1:
                    continue
                if require_injective_on_factors:
                    if not _is_regular(image, d):
                        continue
                    meet = set(phi_a.values()) & set(phi_b.values())
                    if len(meet) != nc:
                        continue
                injective = len(set(phi_a.values())) == na and len(set(phi_b.values())) == nb
                return FiniteQuotientCertificate(d, a_imgs, b_imgs, len(image), injective)
    return None


def verify_finite_quotient(fa: FiniteAmalgam, cert: FiniteQuotientCertificate) -> list:
    """Re-check a certificate by permutation composition; returns a list of problems."""
    problems = []
    d = cert.degree
    for imgs in (cert.a_images, cert.b_images):
        for p in imgs:
            if sorted(p) != list(range(d)):
                problems.append(f"{p} is not a permutation of degree {d}")
    if problems:
        return problems
    if len(cert.a_images) != len(fa.a_gens) or len(cert.b_images) != len(fa.b_gens):
        return ["wrong number of generator images"]
    phi_a = _extend_hom(fa.a_gens, cert.a_images, fa.a_degree, d)
    phi_b = _extend_hom(fa.b_gens, cert.b_images, fa.b_degree, d)
    if phi_a is None:
        problems.append("the A-assignment violates a relation of A")
    if phi_b is None:
        problems.append("the B-assignment violates a relation of B")
    if problems:
        return problems
    for k, (x, y) in enumerate(zip(fa.c_in_a, fa.c_in_b)):
        if phi_a[x] != phi_b[y]:
            problems.append(f"C generator {k + 1} maps to {cycle_string(phi_a[x])} via A and {cycle_string(phi_b[y])} via B")
    image = perm_closure(cert.a_images + cert.b_images, d)
    if len(image) != cert.image_order:
        problems.append(f"image order is {len(image)}, certificate says {cert.image_order}")
    if len(image) == 1:
        problems.append("image is trivial")
    na, nb, _ = fa.orders
    injective = len(set(phi_a.values())) == na and len(set(phi_b.values())) == nb
    if injective != cert.injective_on_factors:
        problems.append(f"injective_on_factors is {injective}, certificate says {cert.injective_on_factors}")
    return problems


@dataclass(frozen=True)
class FreeKernelData:
    graph: Graph
    kernel_rank: int
    formula_rank: Fraction


def _cosets(group: set, sub: set) -> list:
    seen, out = set(), []
    for f in sorted(group):
        if f in seen:
            continue
        coset = frozenset(perm_mul(f, h) for h in sub)
        seen |= coset
        out.append(coset)
    return out


def free_kernel_data(fa: FiniteAmalgam, cert: FiniteQuotientCertificate) -> FreeKernelData:
    """Quotient of the Bass-Serre tree by the kernel of an injective-on-factors map.

    Vertices are the cosets of phi(A) and phi(B) in the image F, edges the
    cosets of phi(C).  The kernel is free of rank equal to the rank of this
    graph, which must match ``1 - |F|(1/|A| + 1/|B| - 1/|C|)``.
    """
    if not cert.injective_on_factors:
        raise InputError("free kernel data needs a certificate that is injective on both factors")
    problems = verify_finite_quotient(fa, cert)
    if problems:
        raise InputError("invalid certificate: " + "; ".join(problems))
    d = cert.degree
    phi_a = _extend_hom(fa.a_gens, cert.a_images, fa.a_degree, d)
    phi_b = _extend_hom(fa.b_gens, cert.b_images, fa.b_degree, d)
    f_group = perm_closure(cert.a_images + cert.b_images, d)
    img_a = set(phi_a.values())
    img_b = set(phi_b.values())
    img_c = {phi_a[x] for x in fa.c_elements_a}
    a_cos = _cosets(f_group, img_a)
    b_cos = _cosets(f_group, img_b)
    c_cos = _cosets(f_group, img_c)
    a_index = {f: i for i, cos in enumerate(a_cos) for f in cos}
    b_index = {f: i for i, cos in enumerate(b_cos) for f in cos}
    vertices = [f"A{i}" for i in range(len(a_cos))] + [f"B{i}" for i in range(len(b_cos))]
    edges = []
    for k, cos in enumerate(c_cos):
        f = min(cos)
        edges.append((f"C{k}", f"A{a_index[f]}", f"B{b_index[f]}"))
    g = build_graph(vertices, edges, name="quotient")
    na, nb, nc = fa.orders
    formula = 1 - len(f_group) * (Fraction(1, na) + Fraction(1, nb) - Fraction(1, nc))
    rank = free_rank(g)
    if formula != rank:
        raise AssertionError(f"kernel rank {rank} disagrees with the Euler characteristic value {formula}")
    return FreeKernelData(g, rank, formula)


@dataclass(frozen=True)
class ObstructionReport:
    status: str  # "holds", "vacuous", "inconclusive-extension", "inconclusive-quotient"
    message: str
    extension: Optional[NormalCommensuration] = None
    amalgam: Optional[FiniteAmalgam] = None
    certificate: Optional[FiniteQuotientCertificate] = None
    details: dict = field(default_factory=dict)

    @property
    def conclusive(self) -> bool:
        return self.status in ("holds", "vacuous")


def obstruction_report(c: Commensuration, max_index: int, max_degree: int) -> ObstructionReport:
    """Test the two necessary conditions for a completion.

    A completion forces a finite-index N normal on both sides and a
    non-trivial finite quotient of the amalgam.  Passing both checks is not a
    proof that a completion exists.
    """
    rep = _require_valid(c)
    if rep.trivial:
        return ObstructionReport(
            "vacuous",
            "no obstruction found: one embedding is onto, so the necessary conditions hold vacuously",
            details={"indices": rep.indices},
        )
    nc = find_normal_extension(c, max_index)
    if nc is None:
        return ObstructionReport(
            "inconclusive-extension",
            f"inconclusive: no simultaneously normal subgroup of index <= {max_index} in H",
            details={"max_index": max_index},
        )
    fa = quotient_amalgam(nc)
    cert = find_finite_quotient(fa, max_degree)
    if cert is None:
        return ObstructionReport(
            "inconclusive-quotient",
            f"inconclusive: no non-trivial finite quotient of degree <= {max_degree}",
            extension=nc,
            amalgam=fa,
            details={"max_degree": max_degree, "index_in_h": nc.index_in_h},
        )
    return ObstructionReport(
        "holds",
        "no obstruction found (necessary conditions hold)",
        extension=nc,
        amalgam=fa,
        certificate=cert,
        details={"index_in_h": nc.index_in_h, "orders": fa.orders, "degree": cert.degree},
    )
