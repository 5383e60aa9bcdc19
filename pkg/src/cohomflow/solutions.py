"""Closed-form and quadrature-level solutions, with smoothness checks at the singular orbit."""
from __future__ import annotations

import csv
import io
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ode_flow import dopri5, t_of_s

__all__ = [
    "ClosedFormSolution",
    "BryantN1Solution",
    "SmoothnessReport",
    "explicit_case5",
    "bryant_n1",
    "smoothness_check",
    "case5_s_residual",
    "solution_csv",
    "SMOOTHNESS_STEPS",
]

SMOOTHNESS_STEPS = (1e-2, 5e-3, 2.5e-3)


def _s_of_t(t: float, lam: float, E: float) -> float:
    """Invert t(s) with Newton in sigma = sqrt(s), safeguarded by bisection."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    c = 2 * lam / E
    k = 2 * math.sqrt(E) / lam

    def g(sig):
        return t_of_s(sig * sig, lam, E) - t

    lo, hi = 0.0, 1.0
    while g(hi) < 0:
        lo, hi = hi, hi * 2
    # near 0, t ~ k sqrt(c) sigma; far out, t ~ k sigma^2 / 2
    sig = min(max(t / (k * math.sqrt(c)), lo), hi)
    for _ in range(100):
        val = g(sig)
        if val > 0:
            hi = min(hi, sig)
        else:
            lo = max(lo, sig)
        deriv = k * math.sqrt(sig * sig + c)
        nxt = sig - val / deriv
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - sig) <= 1e-15 * max(1.0, sig):
            sig = nxt
            break
        sig = nxt
    return sig * sig


@dataclass
class ClosedFormSolution:
    """The explicit steady soliton in terms of s, with s(t) by monotone inversion.

    Metric functions: f on the circle fibre, g1 and g2 on the two sphere
    factors; u is the soliton potential.
    """

    name: str
    E: float
    lam: float
    A: float
    u0: float = 0.0
    metadata: dict = field(default_factory=dict)

    def t_of_s(self, s):
        return t_of_s(s, self.lam, self.E)

    def s(self, t):
        if np.ndim(t) == 0:
            return _s_of_t(float(t), self.lam, self.E)
        return np.array([_s_of_t(float(x), self.lam, self.E) for x in np.ravel(t)]).reshape(np.shape(t))

    def f_of_s(self, s):
        s = np.asarray(s, dtype=float)
        scale = self.lam / math.sqrt(-2 * self.A * self.E)
        return scale * np.sqrt(s / (s + 2 * self.lam / self.E))

    def g1_of_s(self, s):
        return np.sqrt(np.asarray(s, dtype=float))

    def g2_of_s(self, s):
        return np.sqrt(np.asarray(s, dtype=float) + 2 * self.lam / self.E)

    def u_of_s(self, s):
        return self.u0 - self.E * np.asarray(s, dtype=float) / self.lam

    def f(self, t):
        return self.f_of_s(self.s(t))

    def g1(self, t):
        return self.g1_of_s(self.s(t))

    def g2(self, t):
        return self.g2_of_s(self.s(t))

    def u(self, t):
        return self.u_of_s(self.s(t))

    def evaluators(self) -> dict[str, Callable]:
        return {"f": self.f, "g1": self.g1, "g2": self.g2, "u": self.u}

    @property
    def fibre_radius(self) -> float:
        """Limit of f as s -> infinity."""
        return self.lam / math.sqrt(-2 * self.A * self.E)


def explicit_case5(E: float, A: float = -0.5, u0: float = 0.0) -> ClosedFormSolution:
    """The steady soliton on circle bundles over S^2 x S^2, normalised so that lam = 4.

    f = 4/sqrt(-2AE) (1 + 8/(Es))^(-1/2), g1 = sqrt(s), g2 = sqrt(s + 8/E),
    u = u0 - Es/4.  Only A = -1/2 closes up smoothly at s = 0.
    """
    if E <= 0:
        raise ValueError("E must be positive")
    if A >= 0:
        raise ValueError("A must be negative")
    meta = {"b1": -1, "b2": -1, "bundle": "U(1)-bundle over S^2 x S^2 with Euler class (-1, -1)"}
    return ClosedFormSolution("case5", float(E), 4.0, float(A), float(u0), meta)


def case5_s_residual(sol: ClosedFormSolution, s) -> np.ndarray:
    """Plug beta1 = g1^2 = s, beta2 = g2^2 = s + 2 lam/E and u into the radial system.

    Every float is a rational number, so the substitution is carried out in
    exact arithmetic; the result is the max residual per sample.
    """
    lam, E = Fraction(sol.lam), Fraction(sol.E)
    k = E / (2 * lam)
    out = []
    for sv in np.atleast_1d(np.asarray(s, dtype=float)):
        sv = Fraction(float(sv))
        b1, b2 = sv, sv + 2 * lam / E
        r1 = 1 - ((k * b1 * (b2 - b1) + b1) / sv - 1)
        r2 = 1 - ((-k * b2 * (b2 - b1) + b2) / sv + 1)
        r3 = -E / lam - (1 - k * (b1 + b2)) / sv
        out.append(float(max(abs(r1), abs(r2), abs(r3))))
    return np.array(out)


@dataclass
class BryantN1Solution:
    """Numerical solution of the n=1 subsystem in h = e^{q/2} and u."""

    a: float
    E: float
    lam: float
    t: np.ndarray
    h: np.ndarray
    u: np.ndarray
    truncated: str | None = None

    def rhs(self, t, y):
        h, u = y
        return np.array([-(self.a / 2) * h * h + (self.lam * u + self.E - 2 * self.lam) / (2 * self.a), -self.a * h])

    def hdot(self) -> np.ndarray:
        return np.array([self.rhs(0, (h, u))[0] for h, u in zip(self.h, self.u)])

    def residual(self) -> np.ndarray:
        """h'' + a h' h + (lam/2) h, with h'' from the chain rule along the flow."""
        hd = self.hdot()
        udot = -self.a * self.h
        hdd = -self.a * self.h * hd + self.lam / (2 * self.a) * udot
        return hdd + self.a * hd * self.h + self.lam / 2 * self.h

    def steady_closed_form(self, t=None) -> np.ndarray:
        """h = (sqrt E / a) tanh(sqrt E t / 2), valid when lam = 0 and E > 0."""
        if self.lam != 0 or self.E <= 0:
            raise ValueError("closed form needs lam = 0 and E > 0")
        t = self.t if t is None else np.asarray(t)
        return math.sqrt(self.E) / self.a * np.tanh(math.sqrt(self.E) * t / 2)


def bryant_n1(a: float, E: float, lam: float, t_max: float = 10.0, u0: float = 0.0, tol: float = 1e-10) -> BryantN1Solution:
    """Integrate h' = -(a/2)h^2 + (lam u + E - 2 lam)/(2a), u' = -a h from h(0) = 0, u(0) = u0.

    Then h'(0) = (E - 2 lam)/(2a) when u0 = 0.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    sol = BryantN1Solution(float(a), float(E), float(lam), np.array([0.0]), np.array([0.0]), np.array([u0]))
    traj = dopri5(sol.rhs, 0.0, [0.0, u0], t_max, tol=tol)
    sol.t, sol.h, sol.u = traj.t, traj.y[:, 0], traj.y[:, 1]
    sol.truncated = traj.truncated
    return sol


# ----------------------------------------------------------------------------
# Smoothness at the singular orbit


@dataclass
class SmoothnessReport:
    coefficients: dict[str, list[float]]
    checks: dict[str, dict]
    passed: bool

    def to_dict(self) -> dict:
        return {"coefficients": self.coefficients, "checks": self.checks, "passed": self.passed}


def _cubic_coeffs(fn, h: float) -> np.ndarray:
    """Taylor coefficients c0..c3 at 0 from the cubic through t = 0, h, 2h, 3h."""
    ts = np.array([0.0, h, 2 * h, 3 * h])
    vals = np.array([float(fn(x)) for x in ts])
    V = np.vander(ts, 4, increasing=True)
    return np.linalg.solve(V, vals)


def _richardson(fn, steps=SMOOTHNESS_STEPS) -> np.ndarray:
    """One-sided Taylor coefficients with two rounds of Richardson extrapolation.

    The cubic fit coefficient c_k carries error of order h^(4-k), then h^(5-k).
    """
    rows = [_cubic_coeffs(fn, h) for h in steps]
    ratio = steps[0] / steps[1]
    out = np.empty(4)
    for k in range(4):
        p1, p2 = 4 - k, 5 - k
        a = [(ratio ** p1 * rows[i + 1][k] - rows[i][k]) / (ratio ** p1 - 1) for i in range(2)]
        out[k] = (ratio ** p2 * a[1] - a[0]) / (ratio ** p2 - 1)
    return out


def _check(name, value, target, tol):
    ok = bool(abs(value - target) <= tol)
    return name, {"value": float(value), "target": float(target), "tol": tol, "pass": ok}


def smoothness_check(sol: ClosedFormSolution, tol: float = 1e-4, steps=SMOOTHNESS_STEPS) -> SmoothnessReport:
    """Fit cubic Taylor data at t = 0 and test the parity and normalisation conditions.

    f and g1 must be odd with f'(0) = 1 and g1'(0)^2 = 1/2; g2 and u must be
    even, and u(0) = 0.  Parity is tested through order 2.
    """
    fits = {}
    for name, fn in sol.evaluators().items():
        c = _richardson(fn, steps)
        if not np.all(np.isfinite(c)):
            raise FloatingPointError(f"evaluator {name} blew up near t = 0")
        fits[name] = c
    f, g1, g2, u = fits["f"], fits["g1"], fits["g2"], fits["u"]
    checks = dict([
        _check("f(0)", f[0], 0.0, tol),
        _check("f'(0)", f[1], 1.0, tol),
        _check("f''(0)", 2 * f[2], 0.0, tol),
        _check("g1(0)", g1[0], 0.0, tol),
        _check("g1'(0)^2", g1[1] ** 2, 0.5, tol),
        _check("g1''(0)", 2 * g1[2], 0.0, tol),
        _check("g2'(0)", g2[1], 0.0, tol),
        _check("u(0)", u[0], sol.u0, tol),
        _check("u'(0)", u[1], 0.0, tol),
    ])
    passed = all(c["pass"] for c in checks.values())
    coeffs = {k: [float(x) for x in v] for k, v in fits.items()}
    return SmoothnessReport(coeffs, checks, passed)


def solution_csv(sol: ClosedFormSolution, ts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "f", "g1", "g2", "u"])
    for t in ts:
        s = sol.s(float(t))
        w.writerow([repr(float(t))] + [repr(float(v)) for v in (sol.f_of_s(s), sol.g1_of_s(s), sol.g2_of_s(s), sol.u_of_s(s))])
    return buf.getvalue()
