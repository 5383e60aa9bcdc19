import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cohomflow.exp_poly import ExpPoly, hamiltonian, j_poly, parse, render
from cohomflow.first_integrals import (
    bryant_gfi_difference,
    factor_J,
    factorization_to_dict,
    gfi_report_to_dict,
    two_vector_exponents,
    verify_gfi,
)
from cohomflow.surd import to_float
from cohomflow.weight_config import Configuration, catalog_entry

BRYANT = catalog_entry("bryant5")


def gram(dims):
    """Matrix of J(p, p) in the variables (p_1..p_r, phi)."""
    r, n = len(dims), sum(dims)
    M = np.zeros((r + 1, r + 1))
    for i, d in enumerate(dims):
        M[i, i] = -1.0 / d
        M[i, r] = M[r, i] = -0.5
    M[r, r] = -(n - 1) / 4
    return M


def product_of_linear_forms(M, tol=1e-12):
    """A real quadratic form is a product of two linear forms iff rank <= 1, or rank 2 with signature (1, 1)."""
    ev = np.linalg.eigvalsh(M)
    pos, neg = int(np.sum(ev > tol)), int(np.sum(ev < -tol))
    return pos + neg <= 1 or (pos == 1 and neg == 1)


def test_factor_n4_example():
    res = factor_J((4,))
    assert res.feasible and res.identity_verified
    assert res.c == (F(-3), F(1))
    assert res.theta == (F(-1, 2), F(-1, 2))


@pytest.mark.parametrize("n", range(1, 13))
def test_factor_r1_identity(n):
    res = factor_J((n,))
    assert res.feasible and res.identity_verified
    rn = math.sqrt(n)
    assert to_float(res.c[0]) == pytest.approx(-(n + rn) / 2)
    assert to_float(res.theta[0]) == pytest.approx(-1 / rn)
    assert to_float(res.theta[1]) == pytest.approx(-(rn - 1) / 2)
    # numeric spot check of J = (c . grad J) theta
    rng = np.random.default_rng(n)
    M = gram((n,))
    c = np.array([to_float(x) for x in res.c])
    th = np.array([to_float(x) for x in res.theta])
    for _ in range(5):
        p = rng.normal(size=2)
        assert p @ M @ p == pytest.approx((c @ (2 * M @ p)) * (th @ p), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("dims", [(a, b) for a in range(1, 7) for b in range(1, 7)] + [(1, 2, 2), (2, 3, 4, 1)])
def test_factor_r2_infeasible(dims):
    res = factor_J(dims)
    assert not res.feasible
    assert len(res.certificate) == 4
    # the full form has rank > 2 or is definite, so it cannot be a product of linear forms
    assert not product_of_linear_forms(gram(dims))


@pytest.mark.parametrize("n", range(1, 13))
def test_r1_oracle_agrees(n):
    assert product_of_linear_forms(gram((n,)))


def test_factorization_json():
    d = factorization_to_dict(factor_J((4,)))
    assert d["feasible"] and d["identity_verified"]
    assert "theta" in d
    assert "certificate" in factorization_to_dict(factor_J((2, 2)))


# ---------------------------------------------------------------------------
# generalised first integrals


def sympy_bracket_oracle():
    """{F, H} and H for the n=4 data, written out by hand."""
    p, phi, q, u = sympy.symbols("p1 phi q1 u")
    J = -(p ** 2 / 4 + p * phi + sympy.Rational(3, 4) * phi ** 2)
    E, A = 1, 12
    H = sympy.exp(-2 * q + u) * J - E * sympy.exp(2 * q - u) - A * sympy.exp(q - u)
    Fs = J * sympy.exp(-3 * q + u) - E * sympy.exp(q - u) - A * sympy.exp(-u)
    br = sum(sympy.diff(Fs, x) * sympy.diff(H, y) - sympy.diff(Fs, y) * sympy.diff(H, x) for x, y in ((q, p), (u, phi)))
    return br, H, (p, phi, q, u)


def test_bryant_difference_is_gfi():
    rep = verify_gfi(BRYANT, bryant_gfi_difference(BRYANT))
    assert rep.is_gfi
    assert len(rep.phi.terms) == 1
    assert render(rep.phi) == "(1/2*p1 + phi)*exp(-3*q1 + u)"
    br, H, (p, phi, q, u) = sympy_bracket_oracle()
    assert sympy.simplify(sympy.expand(br - (p / 2 + phi) * sympy.exp(-3 * q + u) * H)) == 0
    lib = sympy.sympify(render(rep.bracket), locals={"phi": phi})
    assert sympy.simplify(sympy.expand(lib - br)) == 0


@settings(max_examples=20)
@given(st.fractions(-5, 5).filter(lambda x: x != 0), st.fractions(-5, 5))
def test_gfi_shift_by_H(b, alpha):
    H = hamiltonian(BRYANT)
    base = bryant_gfi_difference(BRYANT, b)
    r1 = verify_gfi(BRYANT, base)
    r2 = verify_gfi(BRYANT, base + H * alpha)
    assert r1.is_gfi and r2.is_gfi
    assert r1.phi == r2.phi


def test_trivial_and_negative_gfi():
    H = hamiltonian(BRYANT)
    rep = verify_gfi(BRYANT, H)
    assert rep.is_gfi and rep.phi.is_zero()
    assert not verify_gfi(BRYANT, ExpPoly.p(2, 0)).is_gfi
    assert not verify_gfi(BRYANT, parse("p1*exp(-2*q1 + u)", 2)).is_gfi


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_gfi_family_against_oracle(n):
    """The same-shaped F for other fibre dimensions, checked against a hand-written bracket."""
    cfg = Configuration((n,), (((-1,), n * (n - 1)),), 1, 0)
    rep = verify_gfi(cfg, bryant_gfi_difference(cfg))
    p, phi, q, u = sympy.symbols("p1 phi q1 u")
    J = -(p ** 2 / n + p * phi + sympy.Rational(n - 1, 4) * phi ** 2)
    A = n * (n - 1)
    H = sympy.exp(-sympy.Rational(n, 2) * q + u) * J - sympy.exp(sympy.Rational(n, 2) * q - u) \
        - A * sympy.exp((sympy.Rational(n, 2) - 1) * q - u)
    Fs = J * sympy.exp(-3 * q + u) - sympy.exp((n - 3) * q - u) - A * sympy.exp((n - 4) * q - u)
    br = sum(sympy.diff(Fs, x) * sympy.diff(H, y) - sympy.diff(Fs, y) * sympy.diff(H, x) for x, y in ((q, p), (u, phi)))
    quotient = sympy.simplify(br / H)
    oracle_gfi = quotient.is_polynomial(p, phi) is not False
    assert rep.is_gfi == oracle_gfi
    lib_phi = sympy.sympify(render(rep.phi), locals={"phi": phi}) if rep.phi is not None and not rep.phi.is_zero() else 0
    assert sympy.simplify(lib_phi - quotient) == 0


def test_gfi_dimension_mismatch():
    with pytest.raises(ValueError):
        verify_gfi(BRYANT, ExpPoly.zero(3))
    with pytest.raises(ValueError):
        bryant_gfi_difference(catalog_entry("warped-2x2"))


def test_gfi_json():
    d = gfi_report_to_dict(verify_gfi(BRYANT, bryant_gfi_difference(BRYANT)))
    assert d["is_gfi"] is True and d["phi"]


# ---------------------------------------------------------------------------
# two-vector exponents


def test_two_vector_n4():
    tv = two_vector_exponents(4)
    assert tv.s_prime == 1
    assert tv.s == 2 and tv.integral_s


@pytest.mark.parametrize("n", range(2, 26))
def test_two_vector_formula(n):
    tv = two_vector_exponents(n)
    rn = math.sqrt(n)
    assert tv.s_prime == 1
    assert to_float(tv.s) == pytest.approx(rn / (rn - 1))
    assert tv.integral_s == (n == 4)


def test_two_vector_values():
    assert two_vector_exponents(9).s == F(3, 2)
    assert to_float(two_vector_exponents(2).s) == pytest.approx(2 + math.sqrt(2))
    with pytest.raises(ValueError):
        two_vector_exponents(1)
