"""Integer matrix groups and commensurations of split virtually abelian groups.

The groups handled here are ``G = Z^d ⋊ P`` with ``P`` a finite subgroup of
``GL_d(Z)``.  A commensuration of two such groups over ``N = Z^d`` is given by
matrices ``M1, M2`` (``N`` sits in the translation lattice of ``G_i`` as
``M_i Z^d``) and the holonomy generators.  Completability reduces to
finiteness of the group generated by both holonomies acting on ``N``.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Optional, Sequence

from . import intlinalg as la
from .errors import CovercommError, InputError

DEFAULT_CAP_D2 = 12  # largest finite subgroup of GL_2(Z) has order 12


@dataclass(frozen=True)
class IntMatrix:
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.rows)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise InputError("matrix must be square and non-empty")
        object.__setattr__(self, "rows", rows)

    @property
    def d(self) -> int:
        return len(self.rows)

    @cached_property
    def det(self) -> int:
        return int(la.det(self.rows))

    @property
    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.d))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(la.mat_mul(self.rows, other.rows))

    def is_identity(self) -> bool:
        return self.rows == la.identity(self.d)

    def inverse(self) -> "IntMatrix":
        if abs(self.det) != 1:
            raise InputError(f"matrix {self} is not invertible over the integers")
        return IntMatrix(la.to_int(la.inverse(self.rows)))

    def __str__(self):
        return "[" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows) + "]"

    @classmethod
    def identity(cls, d: int) -> "IntMatrix":
        return cls(la.identity(d))

    @classmethod
    def scalar(cls, d: int, k: int) -> "IntMatrix":
        return cls(tuple(tuple(k * int(i == j) for j in range(d)) for i in range(d)))


def has_infinite_order(m: IntMatrix) -> bool:
    """Exact test for an element of GL_d(Z).

    In dimension 2 this is the trace rule.  In general the element has finite
    order iff its characteristic polynomial is a product of cyclotomic
    polynomials and ``m^L = I`` for ``L`` the lcm of their indices.
    """
    if m.d == 1:
        return False
    if m.d == 2:
        t = m.trace
        if m.det == -1:
            return t != 0
        if abs(t) < 2:
            return False
        if abs(t) == 2:
            return m.rows != la.identity(2) and m.rows != tuple(tuple(-x for x in r) for r in la.identity(2))
        return True
    exp = la.cyclotomic_exponent(la.charpoly(m.rows))
    if exp is None:
        return True
    return la.mat_pow(m.rows, exp) != la.identity(m.d)


@dataclass(frozen=True)
class MatrixGroupClosure:
    generators: tuple
    verdict: str  # "finite", "infinite" or "inconclusive"
    elements: tuple = ()
    witness_word: tuple = ()  # generator indices, applied as a product left to right
    witness: Optional[IntMatrix] = None
    cap: int = 0

    @property
    def order(self) -> Optional[int]:
        return len(self.elements) if self.verdict == "finite" else None

    def word_string(self) -> str:
        return "*".join(f"g{i}" for i in self.witness_word) or "1"


def _default_cap(d: int, cap: Optional[int]) -> int:
    if cap is not None:
        if cap < 1:
            raise InputError("order cap must be positive")
        return cap
    if d == 1:
        return 2
    if d == 2:
        return DEFAULT_CAP_D2
    raise InputError(f"dimension {d} needs an explicit order cap")


def closure(gens: Sequence[IntMatrix], cap: Optional[int] = None, search_budget: int = 50) -> MatrixGroupClosure:
    """Shortlex breadth-first closure of ``gens`` in GL_d(Z).

    Finite when the closure completes with at most ``cap`` elements.  Every
    new element is tested with :func:`has_infinite_order`; the first hit is
    the shortlex-least infinite-order word.  Past the cap the search goes on
    for ``search_budget * cap`` further elements looking for a witness before
    giving up as inconclusive.
    """
    gens = tuple(gens)
    if not gens:
        raise InputError("closure needs at least one generator")
    d = gens[0].d
    for g in gens:
        if g.d != d:
            raise InputError("generators have different sizes")
        if abs(g.det) != 1:
            raise InputError(f"generator {g} has determinant {g.det}, not +-1")
    cap = _default_cap(d, cap)
    e = IntMatrix.identity(d)
    seen = {e.rows: ()}
    order = [e]
    queue = deque([(e, ())])
    limit = cap * (search_budget + 1)
    while queue:
        m, word = queue.popleft()
        for i, g in enumerate(gens):
            h = m @ g
            if h.rows in seen:
                continue
            w = word + (i,)
            if has_infinite_order(h):
                return MatrixGroupClosure(gens, "infinite", (), w, h, cap)
            seen[h.rows] = w
            order.append(h)
            queue.append((h, w))
            if len(order) > limit:
                return MatrixGroupClosure(gens, "inconclusive", (), (), None, cap)
    if len(order) > cap:
        return MatrixGroupClosure(gens, "inconclusive", (), (), None, cap)
    return MatrixGroupClosure(gens, "finite", tuple(order), (), None, cap)


def parse_matrix(values: Sequence[int], d: int) -> IntMatrix:
    if len(values) != d * d:
        raise InputError(f"expected {d * d} entries for a {d}x{d} matrix, got {len(values)}")
    return IntMatrix(tuple(tuple(values[i * d:(i + 1) * d]) for i in range(d)))


D4 = (IntMatrix(((0, -1), (1, 0))), IntMatrix(((1, 0), (0, -1))))
D6 = (IntMatrix(((0, -1), (1, 1))), IntMatrix(((0, 1), (1, 0))))


@dataclass(frozen=True)
class AbelianCommensuration:
    d: int
    m1: IntMatrix
    m2: IntMatrix
    p1: tuple
    p2: tuple
    name: str = ""

    def m(self, side: int) -> IntMatrix:
        return self.m1 if side == 1 else self.m2

    def p(self, side: int) -> tuple:
        return self.p1 if side == 1 else self.p2


class NotInvariant(InputError):
    pass


def transported_holonomy(c: AbelianCommensuration, side: int) -> tuple:
    """Holonomy generators of G_side written in N-coordinates, ``M^-1 A M``."""
    m = c.m(side)
    if m.d != c.d or m.det == 0:
        raise InputError(f"M{side} must be a non-singular {c.d}x{c.d} matrix")
    minv = la.inverse(m.rows)
    out = []
    for k, a in enumerate(c.p(side)):
        if a.d != c.d:
            raise InputError(f"holonomy generator {k + 1} of P{side} has the wrong size")
        t = la.mat_mul(la.mat_mul(minv, a.rows), m.rows)
        if not la.is_integral(t):
            raise NotInvariant(f"M{side} Z^{c.d} is not invariant under generator {k + 1} of P{side}: {a}")
        out.append(IntMatrix(la.to_int(t)))
    return tuple(out)


@dataclass(frozen=True)
class OutFiniteVerdict:
    out_finite: Optional[bool]
    closure: MatrixGroupClosure
    holonomy_orders: tuple


def is_out_finite(c: AbelianCommensuration, cap: Optional[int] = None) -> OutFiniteVerdict:
    """Whether both holonomies together generate a finite group acting on N."""
    gens = []
    orders = []
    for side in (1, 2):
        t = transported_holonomy(c, side)
        own = closure(t or (IntMatrix.identity(c.d),), cap)
        if own.verdict != "finite":
            raise InputError(f"P{side} does not close up to a finite group")
        orders.append(own.order)
        gens.extend(t)
    cl = closure(tuple(gens) or (IntMatrix.identity(c.d),), cap)
    verdict = {"finite": True, "infinite": False}.get(cl.verdict)
    return OutFiniteVerdict(verdict, cl, tuple(orders))


class NotOutFinite(CovercommError):
    def __init__(self, verdict: OutFiniteVerdict):
        self.verdict = verdict
        cl = verdict.closure
        if cl.verdict == "infinite":
            msg = f"not out-finite: {cl.word_string()} = {cl.witness} has infinite order"
        else:
            msg = f"out-finiteness inconclusive within order cap {cl.cap}"
        super().__init__(msg)


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice ``(1/denom) * span(rows)`` with ``rows`` in Hermite normal form."""

    denom: int
    rows: tuple

    @classmethod
    def spanned_by(cls, vectors: Sequence[Sequence], d: int) -> "Lattice":
        den = la.lcm_denominator(vectors)
        ints = [tuple(int(Fraction(x) * den) for x in v) for v in vectors]
        rows = tuple(la.hnf_rows(ints, d))
        # strip a common factor so the representation is canonical
        g = den
        for r in rows:
            for x in r:
                g = gcd(g, x)
        return cls(den // g, tuple(tuple(x // g for x in r) for r in rows))

    @property
    def rank(self) -> int:
        return len(self.rows)

    def basis(self) -> list:
        return [tuple(Fraction(x, self.denom) for x in r) for r in self.rows]

    def covolume(self) -> Fraction:
        out = Fraction(1)
        for i, r in enumerate(self.rows):
            out *= Fraction(r[i], self.denom)
        return out

    def contains(self, v: Sequence) -> bool:
        w = [Fraction(x) * self.denom for x in v]
        for i, r in enumerate(self.rows):
            c = next(k for k in range(len(r)) if r[k])
            q = w[c] / r[c]
            if q.denominator != 1:
                return False
            w = [a - q * b for a, b in zip(w, r)]
        return all(x == 0 for x in w)

    def index_of(self, sub: "Lattice") -> Fraction:
        return sub.covolume() / self.covolume()


@dataclass(frozen=True)
class AbelianCompletion:
    lattice: Lattice
    gamma: tuple  # IntMatrix elements in N-coordinates
    j1: IntMatrix  # j_i sends a translation t of G_i to M_i^-1 t and A to M_i^-1 A M_i
    j2: IntMatrix
    indices: tuple

    def conjugator(self, side: int) -> IntMatrix:
        return self.j1 if side == 1 else self.j2


def _rational_inverse(m: IntMatrix):
    return la.inverse(m.rows)


def complete_abelian(c: AbelianCommensuration, cap: Optional[int] = None) -> AbelianCompletion:
    """Completion ``K = L ⋊ Γ`` when the commensuration is out-finite.

    ``L`` is spanned by the Γ-orbits of the columns of ``M1^-1`` and
    ``M2^-1`` (the two translation lattices in N-coordinates), ``j_i`` acts
    on translations by ``M_i^-1`` and on holonomy by conjugation.  Raises
    :class:`NotOutFinite` otherwise.
    """
    verdict = is_out_finite(c, cap)
    if not verdict.out_finite:
        raise NotOutFinite(verdict)
    gamma = verdict.closure.elements
    vectors = []
    for side in (1, 2):
        minv = _rational_inverse(c.m(side))
        for col in la.transpose(minv):
            for g in gamma:
                vectors.append(la.mat_vec(g.rows, col))
    lat = Lattice.spanned_by(vectors, c.d)
    indices = []
    for side in (1, 2):
        sub = Lattice.spanned_by(la.transpose(_rational_inverse(c.m(side))), c.d)
        idx = lat.index_of(sub) * len(gamma) / verdict.holonomy_orders[side - 1]
        indices.append(int(idx) if idx.denominator == 1 else idx)
    return AbelianCompletion(lat, gamma, c.m1, c.m2, tuple(indices))


@dataclass(frozen=True)
class CompletionCheck:
    ok: bool
    problems: tuple = ()


def verify_completion(c: AbelianCommensuration, comp: AbelianCompletion) -> CompletionCheck:
    """Check the completion square and every finiteness claim."""
    problems = []
    d = c.d
    gamma = {g.rows for g in comp.gamma}
    if la.identity(d) not in gamma:
        problems.append("Γ does not contain the identity")
    for g in comp.gamma:
        for h in comp.gamma:
            if la.mat_mul(g.rows, h.rows) not in gamma:
                problems.append("Γ is not closed under products")
                break
        else:
            continue
        break
    for g in comp.gamma:
        for k, b in enumerate(comp.lattice.basis()):
            if not comp.lattice.contains(la.mat_vec(g.rows, b)):
                problems.append(f"L is not Γ-invariant: {g} moves basis vector {k + 1} out of L")
    for side in (1, 2):
        jm = comp.conjugator(side)
        if jm.rows != c.m(side).rows:
            problems.append(f"j{side} does not undo M{side}")
            continue
        minv = _rational_inverse(jm)
        # j_i(i_i(v)) = M_i^-1 M_i v = v for the standard basis of N
        for k in range(d):
            e = tuple(int(i == k) for i in range(d))
            img = la.mat_vec(minv, la.mat_vec(c.m(side).rows, e))
            if tuple(img) != e:
                problems.append(f"j{side}∘i{side} moves basis vector {k + 1}")
        for k, col in enumerate(la.transpose(minv)):
            if not comp.lattice.contains(col):
                problems.append(f"j{side} sends translation {k + 1} of G{side} outside L")
        try:
            transported = transported_holonomy(c, side)
        except NotInvariant as exc:
            problems.append(str(exc))
            continue
        for k, t in enumerate(transported):
            if t.rows not in gamma:
                problems.append(f"j{side} sends holonomy generator {k + 1} outside Γ")
        sub = Lattice.spanned_by(la.transpose(minv), d)
        own = closure(transported or (IntMatrix.identity(d),), len(gamma) or None)
        if own.verdict != "finite":
            problems.append(f"P{side} is not finite inside Γ")
            continue
        idx = comp.lattice.index_of(sub) * len(gamma) / own.order
        if idx.denominator != 1 or idx <= 0:
            problems.append(f"[K:G{side}] = {idx} is not a positive integer")
        elif comp.indices[side - 1] != idx:
            problems.append(f"[K:G{side}] is {idx}, completion says {comp.indices[side - 1]}")
    return CompletionCheck(not problems, tuple(problems))


def invariant_embeddings(gens: Sequence[IntMatrix], bound: int) -> list:
    """All 2x2 integer M with entries in [-bound, bound], det != 0 and M Z^2 invariant under gens."""
    out = []
    for entries in itertools.product(range(-bound, bound + 1), repeat=4):
        m = IntMatrix((entries[:2], entries[2:]))
        if m.det == 0:
            continue
        minv = la.inverse(m.rows)
        if all(la.is_integral(la.mat_mul(la.mat_mul(minv, a.rows), m.rows)) for a in gens):
            out.append(m)
    return out


# equivariant averaging on finitely generated abelian groups


@dataclass(frozen=True)
class AveragingInstance:
    """``M = Z^r ⊕ Z/t_1 ⊕ ... ⊕ Z/t_k`` with a finite group action and a retraction.

    Elements are integer vectors of length ``r + k``; torsion coordinates are
    read modulo ``t_j``.  ``gamma_gens`` and ``rho0`` are integer matrices
    acting on such vectors; ``z_gens`` generate the invariant subgroup Z.
    """

    free_rank: int
    torsion: tuple
    gamma_gens: tuple
    z_gens: tuple
    rho0: tuple

    @property
    def n(self) -> int:
        return self.free_rank + len(self.torsion)

    def relations(self) -> list:
        r = self.free_rank
        return [tuple(t if i == r + j else 0 for i in range(self.n)) for j, t in enumerate(self.torsion)]

    def reduce(self, v) -> tuple:
        r = self.free_rank
        return tuple(x if i < r else x % self.torsion[i - r] for i, x in enumerate(v))

    def reduce_matrix(self, m) -> tuple:
        cols = [self.reduce(c) for c in la.transpose(m)]
        return la.transpose(cols)


@dataclass(frozen=True)
class Averaged:
    rho: tuple
    gamma: tuple
    kernel: tuple
    checks: dict = field(default_factory=dict)


class AveragingError(InputError):
    pass


def _in_span(inst: AveragingInstance, v, gens) -> bool:
    lat = la.hnf_rows(list(gens) + inst.relations(), inst.n)
    w = list(v)
    for r in lat:
        c = next(k for k in range(len(r)) if r[k])
        if w[c] % r[c]:
            return False
        q = w[c] // r[c]
        w = [a - q * b for a, b in zip(w, r)]
    return not any(w)


def _is_zero(inst: AveragingInstance, v) -> bool:
    return not any(inst.reduce(v))


def _basis_vectors(n: int):
    return [tuple(int(i == j) for i in range(n)) for j in range(n)]


def group_closure_mod(inst: AveragingInstance, cap: int = 64) -> tuple:
    """Elements of the group generated by ``gamma_gens`` acting on M (canonical mod torsion)."""
    n = inst.n
    for k, g in enumerate(inst.gamma_gens):
        if len(g) != n or any(len(r) != n for r in g):
            raise AveragingError(f"Γ generator {k + 1} must be {n}x{n}")
        for rel in inst.relations():
            if not _is_zero(inst, la.mat_vec(g, rel)):
                raise AveragingError(f"Γ generator {k + 1} does not respect the torsion relations")
    e = inst.reduce_matrix(la.identity(n))
    seen = {e}
    queue = deque([e])
    while queue:
        m = queue.popleft()
        for g in inst.gamma_gens:
            h = inst.reduce_matrix(la.mat_mul(g, m))
            if h not in seen:
                seen.add(h)
                queue.append(h)
                if len(seen) > cap:
                    raise AveragingError(f"Γ has more than {cap} elements")
    elements = sorted(seen)
    for g in elements:
        if not any(inst.reduce_matrix(la.mat_mul(g, h)) == e for h in elements):
            raise AveragingError("the Γ generators do not act invertibly on M")
    return tuple(elements)


def equivariant_average(inst: AveragingInstance, cap: int = 64) -> Averaged:
    """``rho = Σ_γ γ ρ0 γ^-1``: Γ-equivariant, and ``|Γ|`` times the identity on Z."""
    n = inst.n
    gamma = group_closure_mod(inst, cap)
    e = inst.reduce_matrix(la.identity(n))
    basis = _basis_vectors(n)
    for k, z in enumerate(inst.z_gens):
        for g in gamma:
            if not _in_span(inst, la.mat_vec(g, z), inst.z_gens):
                raise AveragingError(f"Z is not Γ-invariant: generator {k + 1} leaves Z")
    rho0 = inst.rho0
    for rel in inst.relations():
        if not _is_zero(inst, la.mat_vec(rho0, rel)):
            raise AveragingError("ρ0 does not respect the torsion relations")
    for v in basis:
        if not _in_span(inst, la.mat_vec(rho0, v), inst.z_gens):
            raise AveragingError("ρ0 does not map into Z")
    for k, z in enumerate(inst.z_gens):
        diff = [a - b for a, b in zip(la.mat_vec(rho0, z), z)]
        if not _is_zero(inst, diff):
            raise AveragingError(f"ρ0 is not a retraction: it moves Z generator {k + 1}")
    inv = {}
    for g in gamma:
        inv[g] = next(h for h in gamma if inst.reduce_matrix(la.mat_mul(g, h)) == e)
    rho = [[0] * n for _ in range(n)]
    for g in gamma:
        term = la.mat_mul(la.mat_mul(g, rho0), inv[g])
        for i in range(n):
            for j in range(n):
                rho[i][j] += term[i][j]
    rho = inst.reduce_matrix(tuple(tuple(r) for r in rho))
    kernel = averaging_kernel(inst, rho)
    checks = averaging_checks(inst, rho, gamma, kernel)
    return Averaged(rho, gamma, kernel, checks)


def averaging_kernel(inst: AveragingInstance, rho) -> tuple:
    """Generators of ``ker ρ``: solutions of ``ρ v = R w`` projected to v."""
    n = inst.n
    rels = inst.relations()
    system = [list(row) + [-rel[i] for rel in rels] for i, row in enumerate(rho)]
    sols = la.integer_kernel(system, n + len(rels))
    gens = [inst.reduce(s[:n]) for s in sols]
    return tuple(g for g in gens if any(g))


def averaging_checks(inst: AveragingInstance, rho, gamma, kernel) -> dict:
    """Exact checks on generating sets; each entry is True when the identity holds."""
    n = inst.n
    order = len(gamma)
    basis = _basis_vectors(n)
    out = {}
    out["equivariant"] = all(
        _is_zero(inst, [a - b for a, b in zip(la.mat_vec(g, la.mat_vec(rho, v)), la.mat_vec(rho, la.mat_vec(g, v)))])
        for g in inst.gamma_gens
        for v in basis
    )
    out["scalar_on_z"] = all(
        _is_zero(inst, [a - order * b for a, b in zip(la.mat_vec(rho, z), z)]) for z in inst.z_gens
    )
    out["kernel_in_kernel"] = all(_is_zero(inst, la.mat_vec(rho, k)) for k in kernel)
    out["kernel_invariant"] = all(
        _in_span(inst, la.mat_vec(g, k), kernel) for g in inst.gamma_gens for k in kernel
    )
    out["order_times_m_in_z_plus_kernel"] = all(
        _in_span(inst, [order * x for x in v], list(inst.z_gens) + list(kernel)) for v in basis
    )
    return out
