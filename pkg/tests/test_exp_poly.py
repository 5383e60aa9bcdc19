from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cohomflow.exp_poly import (
    ExpPoly,
    Poly,
    divides,
    gradient_p,
    gradient_q,
    hamiltonian,
    j_poly,
    parse,
    poisson,
    render,
)
from cohomflow.weight_config import Configuration, catalog_entry


def test_hamiltonian_bryant():
    cfg = catalog_entry("bryant5")
    H = hamiltonian(cfg)
    expected = parse("exp(-2*q1 + u)*J - exp(2*q1 - u)*(E + 12*exp(-q1))", 2, cfg)
    assert H == expected


def test_hamiltonian_u_terms():
    cfg = Configuration((2, 2), (((-1, 0), 2),), 1, 1)
    H = hamiltonian(cfg)
    half = (F(1), F(1), F(-1))
    assert H.terms[half].degree(5) == 1
    steady = hamiltonian(catalog_entry("bbc-case5"))
    assert not steady.uses_var(steady.m * 2 - 1)


def test_hamiltonian_kinetic_only():
    cfg = Configuration((1, 2))
    H = hamiltonian(cfg)
    assert list(H.terms) == [(F(-1, 2), F(-1), F(1))]
    assert H.terms[(F(-1, 2), F(-1), F(1))] == j_poly((1, 2))


def test_gradients():
    f = ExpPoly.exp((1, 0))
    assert gradient_q(f)[0] == f
    p = ExpPoly.p(2, 0)
    assert gradient_p(p * p)[0] == p * 2
    # polynomial coefficient picks up the product rule
    u = ExpPoly.q(2, 1)
    g = u * ExpPoly.exp((0, -1))
    assert gradient_q(g)[1] == ExpPoly.exp((0, -1)) - u * ExpPoly.exp((0, -1))


def test_poisson_canonical():
    e = ExpPoly.exp((1, 0))
    assert poisson(e, ExpPoly.p(2, 0)) == e
    H = hamiltonian(catalog_entry("bbc-case5"))
    assert poisson(H, H).is_zero()


def test_divides():
    H = hamiltonian(catalog_entry("bryant5"))
    assert divides(H, H) == ExpPoly.const(2, 1)
    assert divides(H, ExpPoly.zero(2)).is_zero()
    assert divides(H, H * H) == H
    assert divides(H, ExpPoly.p(2, 0)) is None
    with pytest.raises(ZeroDivisionError):
        divides(ExpPoly.zero(2), H)


def test_render_parse_roundtrip():
    for name in ("bryant5", "bbc-case5", "bryant-n1"):
        cfg = catalog_entry(name)
        H = hamiltonian(cfg)
        assert parse(render(H), cfg.r + 1) == H


def test_evaluate_matches_sympy():
    cfg = catalog_entry("bbc-r2")
    H = hamiltonian(cfg)
    syms = sympy.symbols("p1 p2 phi q1 q2 u")
    expr = sympy.sympify(render(H).replace("exp", "sympy.exp"), locals={"sympy": sympy})
    vals = [0.3, -0.2, 0.5, 0.1, -0.4, 0.7]
    ref = float(expr.subs(dict(zip(syms, vals))))
    got = H.evaluate(vals[:3], vals[3:])
    assert abs(got - ref) < 1e-12 * max(1, abs(ref))
    assert abs(H.compile()(np.array(vals[:3]), np.array(vals[3:])) - ref) < 1e-12 * max(1, abs(ref))


# ---------------------------------------------------------------------------
# random exponential polynomials, m = 2

half = st.sampled_from([F(-1), F(-1, 2), F(0), F(1, 2), F(1)])
coef = st.fractions(min_value=-3, max_value=3, max_denominator=3).filter(lambda c: c != 0)
mono = st.tuples(st.integers(0, 2), st.integers(0, 1), st.just(0), st.integers(0, 1))


@st.composite
def exppolys(draw, max_terms=3):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        b = (draw(half), draw(half))
        poly = Poly(4, {draw(mono): draw(coef) for _ in range(draw(st.integers(1, 2)))})
        terms[b] = poly if b not in terms else terms[b] + poly
    return ExpPoly(2, terms)


@settings(max_examples=200)
@given(exppolys(), exppolys(), exppolys())
def test_poisson_identities(f, g, h):
    assert poisson(f, g) == -poisson(g, f)
    assert poisson(f, g + h) == poisson(f, g) + poisson(f, h)
    assert poisson(f, g * h) == poisson(f, g) * h + g * poisson(f, h)
    jac = poisson(f, poisson(g, h)) + poisson(g, poisson(h, f)) + poisson(h, poisson(f, g))
    assert jac.is_zero()


@given(exppolys(), exppolys())
def test_gradient_additive(f, g):
    for a, b, c in zip(gradient_q(f + g), gradient_q(f), gradient_q(g)):
        assert a == b + c
    for a, b, c in zip(gradient_p(f + g), gradient_p(f), gradient_p(g)):
        assert a == b + c


@given(exppolys(), st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_gradient_finite_differences(f, x):
    p, q = np.array(x[:2]), np.array(x[2:])
    h = 1e-5
    for i, g in enumerate(gradient_q(f)):
        e = np.zeros(2)
        e[i] = h
        fd = (f.evaluate(p, q + e) - f.evaluate(p, q - e)) / (2 * h)
        exact = g.evaluate(p, q)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


@given(exppolys(), exppolys())
def test_divides_products(f, g):
    if f.is_zero() or g.is_zero():
        return
    assert divides(f, f * g) == g
