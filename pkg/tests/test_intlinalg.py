import random
from fractions import Fraction

import sympy
from sympy.matrices.normalforms import smith_normal_form
from hypothesis import given, settings
from hypothesis import strategies as st

from covercomm import intlinalg as la

small = st.integers(-5, 5)


def square(n):
    return st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(square))
def test_det_and_charpoly_match_sympy(rows):
    m = sympy.Matrix(rows)
    assert la.det(rows) == m.det()
    x = sympy.Symbol("x")
    want = [int(c) for c in sympy.Poly(m.charpoly(x).as_expr(), x).all_coeffs()]
    assert la.charpoly(rows) == want


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(square))
def test_inverse_matches_sympy(rows):
    m = sympy.Matrix(rows)
    if m.det() == 0:
        return
    inv = la.inverse(rows)
    assert [[Fraction(int(v.p), int(v.q)) for v in r] for r in m.inv().tolist()] == [list(r) for r in inv]


def test_cyclotomic_polynomials():
    x = sympy.Symbol("x")
    for n in range(1, 25):
        want = [int(c) for c in sympy.Poly(sympy.cyclotomic_poly(n, x), x).all_coeffs()]
        assert la.cyclotomic(n) == want


def test_cyclotomic_exponent():
    assert la.cyclotomic_exponent([1, 0, 1]) == 4  # x^2 + 1
    assert la.cyclotomic_exponent([1, -1, 1]) == 6
    assert la.cyclotomic_exponent([1, -2, 1]) == 1  # (x - 1)^2
    assert la.cyclotomic_exponent([1, -3, 1]) is None


def test_hnf_covolume_matches_smith_form():
    rng = random.Random(1)
    for _ in range(40):
        n = rng.randint(1, 3)
        vecs = [tuple(rng.randint(-6, 6) for _ in range(n)) for _ in range(rng.randint(n, n + 2))]
        if sympy.Matrix(vecs).rank() < n:
            continue
        rows = la.hnf_rows(vecs, n)
        assert len(rows) == n
        snf = smith_normal_form(sympy.Matrix(vecs), domain=sympy.ZZ)
        assert abs(sympy.Matrix(rows).det()) == abs(sympy.prod(snf[i, i] for i in range(n)))
        for i, r in enumerate(rows):
            c = next(k for k in range(n) if r[k])
            assert r[c] > 0
            assert all(0 <= above[c] < r[c] for above in rows[:i])


def test_integer_kernel():
    a = ((1, 2, 3), (2, 4, 6))
    ker = la.integer_kernel(a, 3)
    assert len(ker) == 2
    for v in ker:
        assert la.mat_vec(a, v) == (0, 0)
    assert la.integer_kernel(((1, 0), (0, 1)), 2) == []


def test_mat_pow():
    m = ((1, 1), (0, 1))
    assert la.mat_pow(m, 5) == ((1, 5), (0, 1))
    assert la.mat_pow(m, 0) == la.identity(2)
