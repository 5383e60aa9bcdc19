"""Factorisation of the kinetic form, generalised first integrals, and two-vector exponents.

A generalised first integral is an F with {F, H} = Phi H for some Phi in the
ExpPoly class; it is conserved on the constraint surface H = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .exact_geometry import rank
from .exp_poly import ExpPoly, Poly, divides, hamiltonian, j_poly, poisson, render, render_poly, var_names
from .surd import RadicalScalar, Scalar, Surd, scalar_inverse, sqrt_rational, to_float
from .weight_config import Configuration

__all__ = [
    "FactorizationResult",
    "GFIReport",
    "TwoVectorExponents",
    "factor_J",
    "verify_gfi",
    "bryant_gfi_difference",
    "two_vector_exponents",
    "factorization_to_dict",
    "gfi_report_to_dict",
]


@dataclass
class FactorizationResult:
    """J = (c . grad J) theta when feasible; otherwise a certificate of the contradiction."""

    feasible: bool
    dims: tuple[int, ...]
    c: tuple | None = None
    theta: tuple | None = None
    identity_verified: bool = False
    certificate: list[str] = field(default_factory=list)

    def theta_poly(self) -> Poly:
        m = len(self.dims) + 1
        nv = 2 * m
        out = Poly(nv)
        for i, t in enumerate(self.theta):
            out = out + Poly.var(nv, i, t)
        return out


def _linear_poly(nv: int, coeffs) -> Poly:
    out = Poly(nv)
    for i, c in enumerate(coeffs):
        if c != 0:
            out = out + Poly.var(nv, i, c)
    return out


def _c_dot_grad(dims, c) -> Poly:
    """c . grad J as a linear polynomial in the momenta."""
    J = j_poly(dims)
    out = Poly(J.nv)
    for i, ci in enumerate(c):
        if ci != 0:
            out = out + J.diff(i).scale(ci)
    return out


def factor_J(cfg: Configuration | tuple) -> FactorizationResult:
    """Find c and a linear theta with J = (c . grad J) theta, or prove none exists.

    For r = 1 the factorisation is explicit in sqrt(n).  For r >= 2 the
    restriction of J to (p_1, p_2) is -(p_1^2/d_1 + p_2^2/d_2), which is
    definite of rank two and therefore not a product of linear forms.
    """
    dims = tuple(cfg.dims) if isinstance(cfg, Configuration) else tuple(cfg)
    r = len(dims)
    n = sum(dims)
    if r == 1:
        rn = sqrt_rational(n)
        c = (-(n + rn) / 2, Fraction(1))
        theta = (-scalar_inverse(rn), -(rn - 1) / 2)
        nv = 4
        lhs = j_poly(dims)
        rhs = _c_dot_grad(dims, c) * _linear_poly(nv, theta)
        return FactorizationResult(True, dims, c, theta, (lhs - rhs).is_zero())
    # The p-block of the Gram matrix is -diag(1/d); any product of two linear
    # forms restricted to a plane is indefinite or degenerate.
    block = [[Fraction(-1, dims[0]), Fraction(0)], [Fraction(0), Fraction(-1, dims[1])]]
    assert rank(block) == 2
    d1, d2 = dims[0], dims[1]
    cert = [
        f"p1^2: 1/{d1} = (2*c1/{d1} + c{r + 1})*t1",
        f"p1*p2: 0 = (2*c1/{d1} + c{r + 1})*t2 + (2*c2/{d2} + c{r + 1})*t1",
        f"p2^2: 1/{d2} = (2*c2/{d2} + c{r + 1})*t2",
        f"combined: 0 = t2^2/{d1} + t1^2/{d2}, so t1 = t2 = 0, contradicting the p1^2 equation",
    ]
    return FactorizationResult(False, dims, certificate=cert)


@dataclass
class GFIReport:
    bracket: ExpPoly
    phi: ExpPoly | None
    is_gfi: bool


def verify_gfi(cfg: Configuration, F: ExpPoly) -> GFIReport:
    """Compute {F, H} and try to divide it exactly by H."""
    H = hamiltonian(cfg)
    if F.m != H.m:
        raise ValueError(f"F has {F.m} position variables, expected {H.m}")
    bracket = poisson(F, H)
    phi = divides(H, bracket)
    return GFIReport(bracket, phi, phi is not None)


def bryant_gfi_difference(cfg: Configuration, b=1) -> ExpPoly:
    """b (J e^{-3q+u} - E e^{q-u} - n(n-1) e^{-u}) for the r=1 data d=(n), w=(-1).

    Written for n = 4, where the exponent vector c = (-3, 1) comes from the
    two-vector construction; other n are accepted for experimentation.
    """
    if cfg.r != 1:
        raise ValueError("requires r = 1")
    n = cfg.n
    A = cfg.weight_map.get((-1,), Fraction(n * (n - 1)))
    c = (Fraction(-3), Fraction(1))
    d = (Fraction(n), Fraction(-2))
    cd = tuple(x + y for x, y in zip(c, d))
    cdw = (cd[0] - 1, cd[1])
    F = ExpPoly(2, {c: j_poly(cfg.dims)}) - ExpPoly.exp(cd, cfg.E) - ExpPoly.exp(cdw, A)
    return F * Fraction(b)


@dataclass
class TwoVectorExponents:
    n: int
    d_dot_grad_theta: Scalar
    dw_dot_grad_theta: Scalar
    s_prime: Fraction
    s: Scalar
    integral_s: bool
    note: str = ""


def two_vector_exponents(n: int) -> TwoVectorExponents:
    """Exponents s' = -1/(d . grad theta) and s = -1/((d+w) . grad theta) for d=(n), w=(-1, 0)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    fac = factor_J((n,))
    grad = fac.theta
    d_ext = (Fraction(n), Fraction(-2))
    dw = (Fraction(n - 1), Fraction(-2))
    a = sum((x * g for x, g in zip(d_ext, grad)), Fraction(0))
    b = sum((x * g for x, g in zip(dw, grad)), Fraction(0))
    s_prime = -scalar_inverse(a)
    s = -scalar_inverse(b)
    if not isinstance(s_prime, Fraction):
        raise AssertionError("s' is expected to be rational")
    integral = isinstance(s, Fraction) and s.denominator == 1 and s > 0
    note = ("theta^s is polynomial; the construction is known to close only in fibre dimension 4"
            if integral else "s is not a positive integer, so theta^s is not polynomial")
    return TwoVectorExponents(n, a, b, s_prime, s, integral, note)


# ----------------------------------------------------------------------------
# JSON


def _scalar_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Surd):
        return {"surd": {str(k): str(v) for k, v in sorted(x.terms.items())}, "approx": float(x)}
    return str(x)


def factorization_to_dict(res: FactorizationResult) -> dict:
    out = {"dims": list(res.dims), "feasible": res.feasible}
    if res.feasible:
        names = var_names(len(res.dims) + 1)
        out["c"] = [_scalar_json(x) for x in res.c]
        out["theta"] = render_poly(res.theta_poly(), names)
        out["identity_verified"] = res.identity_verified
    else:
        out["certificate"] = res.certificate
    return out


def gfi_report_to_dict(rep: GFIReport) -> dict:
    return {
        "is_gfi": rep.is_gfi,
        "bracket": render(rep.bracket),
        "phi": render(rep.phi) if rep.phi is not None else None,
    }
