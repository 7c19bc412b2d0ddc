import random
from fractions import Fraction

import pytest

from covercomm import intlinalg as la
from covercomm.abelian import (
    D4,
    D6,
    AbelianCommensuration,
    AbelianCompletion,
    AveragingError,
    AveragingInstance,
    IntMatrix,
    Lattice,
    NotInvariant,
    NotOutFinite,
    closure,
    complete_abelian,
    equivariant_average,
    has_infinite_order,
    invariant_embeddings,
    is_out_finite,
    verify_completion,
)
from covercomm.errors import InputError

I2 = IntMatrix.identity(2)
TWO = IntMatrix.scalar(2, 2)
HALF = Fraction(1, 2)


def _brute_order(m, limit=200):
    p = m
    for k in range(1, limit + 1):
        if p.is_identity():
            return k
        p = p @ m
    return None


def test_d4_d6_orders():
    assert closure(D4).order == 8
    assert closure(D6).order == 12
    assert closure((I2,)).order == 1


def test_finite_closure_is_a_group():
    for gens in (D4, D6):
        els = {m.rows for m in closure(gens).elements}
        for a in els:
            assert la.to_int(la.inverse(a)) in els
            for b in els:
                assert la.mat_mul(a, b) in els


def test_d4_union_d6_infinite():
    cl = closure(D4 + D6)
    assert cl.verdict == "infinite"
    assert len(cl.witness_word) <= 2
    assert cl.witness.rows == ((-1, -1), (0, -1))
    sq = cl.witness @ cl.witness
    assert sq.rows == ((1, 2), (0, 1))
    prod = I2
    for i in cl.witness_word:
        prod = prod @ (D4 + D6)[i]
    assert prod == cl.witness


def test_determinant_must_be_unit():
    with pytest.raises(InputError):
        closure((TWO,))


def test_large_dimension_needs_cap():
    with pytest.raises(InputError):
        closure((IntMatrix.identity(3),))
    assert closure((IntMatrix.identity(3),), cap=4).order == 1


def test_three_dimensional_infinite_witness():
    m = IntMatrix(((1, 1, 0), (0, 1, 0), (0, 0, 1)))
    assert has_infinite_order(m)
    assert closure((m,), cap=24).verdict == "infinite"
    perm = IntMatrix(((0, 1, 0), (0, 0, 1), (1, 0, 0)))
    assert closure((perm,), cap=24).order == 3


def test_infinite_order_agrees_with_brute_force():
    rng = random.Random(9)
    seen = 0
    while seen < 300:
        rows = tuple(tuple(rng.randint(-3, 3) for _ in range(2)) for _ in range(2))
        m = IntMatrix(rows)
        if abs(m.det) != 1:
            continue
        seen += 1
        finite = _brute_order(m, 12) is not None
        assert has_infinite_order(m) == (not finite)


def test_three_by_three_order_test():
    rng = random.Random(10)
    seen = 0
    while seen < 150:
        m = IntMatrix(tuple(tuple(rng.randint(-1, 1) for _ in range(3)) for _ in range(3)))
        if abs(m.det) != 1:
            continue
        seen += 1
        # finite subgroups of GL_3(Z) have element orders in {1,2,3,4,6}
        finite = _brute_order(m, 12) is not None
        assert has_infinite_order(m) == (not finite)


def test_random_finite_closures_stay_within_twelve():
    rng = random.Random(12)
    elements = list(closure(D4).elements) + list(closure(D6).elements)
    for _ in range(100):
        gens = tuple(rng.sample(elements, rng.randint(1, 3)))
        cl = closure(gens)
        if cl.verdict == "finite":
            assert cl.order <= 12


# out-finiteness


def test_trivial_holonomy_out_finite():
    c = AbelianCommensuration(2, I2, TWO, (), ())
    v = is_out_finite(c)
    assert v.out_finite and v.closure.order == 1


def test_d4_vs_d6_not_out_finite():
    v = is_out_finite(AbelianCommensuration(2, I2, I2, D4, D6))
    assert v.out_finite is False


def test_scaled_d4_out_finite():
    v = is_out_finite(AbelianCommensuration(2, TWO, TWO, D4, D4))
    assert v.out_finite and v.closure.order == 8


def test_non_invariant_lattice_reported():
    m = IntMatrix(((1, 0), (0, 2)))
    with pytest.raises(NotInvariant, match="generator 1"):
        is_out_finite(AbelianCommensuration(2, m, I2, D4, D4))


def test_invariant_embedding_counts():
    assert len(invariant_embeddings(D4, 3)) == 432
    assert len(invariant_embeddings(D6, 3)) == 384


def test_random_embeddings_never_out_finite():
    rng = random.Random(2024)
    e4, e6 = invariant_embeddings(D4, 3), invariant_embeddings(D6, 3)
    for _ in range(100):
        c = AbelianCommensuration(2, rng.choice(e4), rng.choice(e6), D4, D6)
        assert is_out_finite(c).out_finite is False


# completion


def test_trivial_completion():
    c = AbelianCommensuration(2, I2, I2, D4, D4)
    comp = complete_abelian(c)
    assert comp.indices == (1, 1)
    assert verify_completion(c, comp).ok


def test_completion_identity_vs_double():
    c = AbelianCommensuration(2, I2, TWO, D4, D4)
    comp = complete_abelian(c)
    assert comp.lattice == Lattice.spanned_by([(HALF, 0), (0, HALF)], 2)
    assert comp.indices == (4, 1)
    assert verify_completion(c, comp).ok


def test_completion_scaled_sublattice():
    c = AbelianCommensuration(2, TWO, TWO, D4, D4)
    comp = complete_abelian(c)
    assert comp.indices == (1, 1)
    assert verify_completion(c, comp).ok


def test_d4_d6_completion_raises():
    with pytest.raises(NotOutFinite) as info:
        complete_abelian(AbelianCommensuration(2, I2, I2, D4, D6))
    assert info.value.verdict.closure.witness is not None


def test_corrupted_lattice_fails_invariance():
    c = AbelianCommensuration(2, TWO, TWO, D4, D4)
    comp = complete_abelian(c)
    # drop the second basis vector and replace it with a non-invariant one
    bad_lattice = Lattice.spanned_by([(HALF, 0), (0, 1)], 2)
    bad = AbelianCompletion(bad_lattice, comp.gamma, comp.j1, comp.j2, comp.indices)
    check = verify_completion(c, bad)
    assert not check.ok
    assert any("not Γ-invariant" in p for p in check.problems)


def test_random_completions_verify():
    # M2 = g M1 k with g in the holonomy group and k a scalar transports D4
    # to the same subgroup on both sides, so the pair is out-finite
    rng = random.Random(77)
    e4 = invariant_embeddings(D4, 2)
    group = closure(D4).elements
    for _ in range(40):
        m1 = rng.choice(e4)
        m2 = rng.choice(group) @ m1 @ IntMatrix.scalar(2, rng.randint(1, 3))
        c = AbelianCommensuration(2, m1, m2, D4, D4)
        comp = complete_abelian(c)
        assert verify_completion(c, comp).ok
        assert all(i > 0 for i in comp.indices)


def test_mismatched_embeddings_usually_obstructed():
    rng = random.Random(78)
    e4 = invariant_embeddings(D4, 2)
    for _ in range(40):
        c = AbelianCommensuration(2, rng.choice(e4), rng.choice(e4), D4, D4)
        if is_out_finite(c).out_finite:
            assert verify_completion(c, complete_abelian(c)).ok
        else:
            with pytest.raises(NotOutFinite):
                complete_abelian(c)


def test_lattice_index():
    full = Lattice.spanned_by([(1, 0), (0, 1)], 2)
    sub = Lattice.spanned_by([(2, 0), (0, 2)], 2)
    assert full.index_of(sub) == 4
    assert full.contains((3, -1)) and not sub.contains((1, 0))


# averaging


def _inst(free, torsion, gammas, zs, rho0):
    return AveragingInstance(free, tuple(torsion), tuple(gammas), tuple(zs), rho0)


def test_trivial_gamma_returns_rho0():
    rho0 = ((1, 0), (0, 0))
    res = equivariant_average(_inst(2, (), [((1, 0), (0, 1))], [(1, 0)], rho0))
    assert res.rho == rho0
    assert all(res.checks.values())


def test_sign_action_doubles_projection():
    res = equivariant_average(_inst(2, (), [((-1, 0), (0, -1))], [(1, 0)], ((1, 0), (0, 0))))
    assert res.rho == ((2, 0), (0, 0))
    assert res.kernel == ((0, 1),)
    assert all(res.checks.values())


def test_torsion_meets_kernel():
    # M = Z + Z/2, Γ negates the free part, Z is the torsion part
    inst = _inst(1, (2,), [((-1, 0), (0, 1))], [(0, 1)], ((0, 0), (0, 1)))
    res = equivariant_average(inst)
    assert len(res.gamma) == 2
    assert all(res.checks.values())
    # ρ(0,1) = 2*(0,1) = 0 in Z/2, so all of the torsion lies in the kernel
    assert inst.reduce(la.mat_vec(res.rho, (0, 1))) == (0, 0)


def test_non_invariant_z_rejected():
    swap = ((0, 1), (1, 0))
    with pytest.raises(AveragingError, match="not Γ-invariant"):
        equivariant_average(_inst(2, (), [swap], [(1, 0)], ((1, 0), (0, 0))))


def test_non_retraction_rejected():
    with pytest.raises(AveragingError, match="retraction"):
        equivariant_average(_inst(2, (), [((1, 0), (0, 1))], [(1, 0)], ((2, 0), (0, 0))))
