"""Superpotential condition: exact checking, coefficient solving and bounded search.

A superpotential ansatz is ``f = sum_c f_c exp(c . q)`` over a finite set C of
extended exponent vectors.  The condition ``J(grad f, grad f) = e^{d.q}(E -
lam(n+1) + lam u + sum A_w e^{w.q})`` is checked through the ExpPoly algebra,
while the solver works with the equivalent pairwise equations

    sum_{a + c = b} J(a, c) f_a f_c = A_w  (b = d + w),  E - lam(n+1) + lam u  (b = d),  0  (otherwise)

plus derivative terms when coefficients are polynomials of degree one in u.

Points of C are usually written in x-coordinates, ``c = (d + x)/2`` with the
extended slot of x equal to 0, which places c on the hyperplane P.
"""
from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .exact_geometry import JForm, hull_vertices, in_hull, is_null, j_eval, qvec
from .exp_poly import ExpPoly, Poly, gradient_q
from .surd import (
    RadicalScalar,
    Surd,
    as_scalar,
    parse_rational,
    scalar_inverse,
    scalar_sign,
    scalar_sqrt,
    sqrt_rational,
    to_float,
)
from .weight_config import Configuration

__all__ = [
    "SuperpotentialAnsatz",
    "ConditionReport",
    "SolveResult",
    "SearchResult",
    "from_x",
    "to_x",
    "check",
    "solve_coefficients",
    "solve_detailed",
    "search",
    "ab_signature",
    "ansatz_to_dict",
    "ansatz_from_dict",
    "search_result_to_dict",
    "case5_ansatz",
    "bryant_n1_ansatz",
    "MAX_C",
]

MAX_C = 12


# ----------------------------------------------------------------------------
# Coordinates


def from_x(cfg: Configuration, x: Sequence) -> tuple[Fraction, ...]:
    """Extended exponent c = (d + x)/2; x may have r entries (then on P) or r+1."""
    x = list(qvec(x))
    if len(x) == cfg.r:
        x.append(Fraction(0))
    if len(x) != cfg.r + 1:
        raise ValueError("x has the wrong length")
    d = list(cfg.form.d_ext)
    return tuple((di + xi) / 2 for di, xi in zip(d, x))


def to_x(cfg: Configuration, c: Sequence) -> tuple[Fraction, ...]:
    d = cfg.form.d_ext
    return tuple(2 * Fraction(ci) - di for ci, di in zip(c, d))


# ----------------------------------------------------------------------------
# Ansatz and reports


def _is_poly(coef) -> bool:
    return isinstance(coef, Poly)


@dataclass(frozen=True)
class SuperpotentialAnsatz:
    """Exponent vectors with their coefficients.

    A coefficient is an exact scalar (Fraction or Surd), a float (numeric
    solutions that could not be recognised exactly), or, in non-steady mode, a
    :class:`Poly` in the phase-space variables involving only u.
    """

    entries: tuple[tuple[tuple[Fraction, ...], object], ...]
    steady: bool = True

    def __post_init__(self):
        seen = set()
        clean = []
        for c, coef in self.entries:
            c = qvec(c)
            if c in seen:
                raise ValueError(f"duplicate exponent {c}")
            seen.add(c)
            if _is_poly(coef):
                if coef.is_zero():
                    raise ValueError("zero coefficient")
                if self.steady and not coef.is_constant():
                    raise ValueError("steady ansatz needs constant coefficients")
            elif isinstance(coef, float):
                if coef == 0.0:
                    raise ValueError("zero coefficient")
            else:
                coef = coef.value if isinstance(coef, RadicalScalar) else as_scalar(coef)
                if coef == 0:
                    raise ValueError("zero coefficient")
            clean.append((c, coef))
        clean.sort(key=lambda e: e[0])
        object.__setattr__(self, "entries", tuple(clean))

    @property
    def exponents(self) -> list[tuple[Fraction, ...]]:
        return [c for c, _ in self.entries]

    @property
    def m(self) -> int:
        return len(self.entries[0][0]) if self.entries else 0

    def coefficient(self, c):
        c = qvec(c)
        for e, coef in self.entries:
            if e == c:
                return coef
        raise KeyError(c)

    @property
    def numeric(self) -> bool:
        return any(isinstance(coef, float) for _, coef in self.entries)

    def to_exppoly(self, m: int | None = None) -> ExpPoly:
        if self.numeric:
            raise ValueError("numeric coefficients have no exact ExpPoly form")
        m = m or self.m
        nv = 2 * m
        return ExpPoly(m, {c: coef if _is_poly(coef) else Poly.const(nv, coef) for c, coef in self.entries})

    def flip(self, exponents: Iterable) -> "SuperpotentialAnsatz":
        """Negate the coefficients at the given exponent vectors."""
        targets = {qvec(c) for c in exponents}
        return SuperpotentialAnsatz(
            tuple((c, -coef if c in targets else coef) for c, coef in self.entries), self.steady
        )


@dataclass
class ConditionReport:
    residuals: dict
    satisfied: bool
    violated_b: list
    numeric: bool = False
    max_abs_residual: float = 0.0


def _rhs_exppoly(cfg: Configuration) -> ExpPoly:
    m = cfg.r + 1
    nv = 2 * m
    d = cfg.form.d_ext
    base = Poly.const(nv, cfg.E - cfg.lam * (cfg.n + 1)) + Poly.var(nv, nv - 1, cfg.lam)
    out = ExpPoly(m, {d: base})
    for w, a in cfg.weights:
        b = tuple(x + y for x, y in zip(d, tuple(w.entries) + (0,)))
        out = out + ExpPoly(m, {b: Poly.const(nv, a)})
    return out


def condition_exppoly(cfg: Configuration, f: ExpPoly) -> ExpPoly:
    """J(grad f, grad f) minus the right-hand side; zero exactly for a superpotential."""
    form = cfg.form
    grad = gradient_q(f)
    lhs = ExpPoly.zero(f.m)
    for i in range(f.m):
        for j in range(f.m):
            mij = form.matrix[i][j]
            if mij != 0:
                lhs = lhs + grad[i] * grad[j] * mij
    return lhs - _rhs_exppoly(cfg)


def _pair_formula_numeric(cfg: Configuration, ansatz: SuperpotentialAnsatz) -> dict:
    form = cfg.form
    rhs = {}
    d = form.d_ext
    for w, a in cfg.weights:
        rhs[tuple(x + y for x, y in zip(d, tuple(w.entries) + (0,)))] = float(a)
    if cfg.lam != 0:
        raise ValueError("numeric check is only available for steady constant ansatze")
    rhs[tuple(d)] = float(cfg.E)
    sums: dict = {}
    for (a, fa), (c, fc) in itertools.product(ansatz.entries, repeat=2):
        b = tuple(x + y for x, y in zip(a, c))
        sums[b] = sums.get(b, 0.0) + float(j_eval(form, a, c)) * float(fa) * float(fc)
    for b in rhs:
        sums.setdefault(b, 0.0)
    return {b: v - rhs.get(b, 0.0) for b, v in sums.items()}


def check(cfg: Configuration, ansatz: SuperpotentialAnsatz, tol: float = 1e-12) -> ConditionReport:
    """Compare both sides of the superpotential condition at every exponent b.

    Exact coefficients give an exact verdict.  Float coefficients fall back to
    the pairwise formula in double precision with relative tolerance ``tol``.
    """
    if ansatz.numeric:
        res = _pair_formula_numeric(cfg, ansatz)
        scale = max([1.0] + [abs(float(a)) for _, a in cfg.weights] + [abs(float(cfg.E))])
        bad = sorted(b for b, v in res.items() if abs(v) > tol * scale)
        return ConditionReport(res, not bad, bad, True, max((abs(v) for v in res.values()), default=0.0))
    g = condition_exppoly(cfg, ansatz.to_exppoly(cfg.r + 1))
    sumset = {tuple(x + y for x, y in zip(a, c)) for a in ansatz.exponents for c in ansatz.exponents}
    residuals = {}
    for b in sorted(sumset | set(g.terms)):
        poly = g.terms.get(b)
        if poly is None:
            residuals[b] = Fraction(0)
        elif poly.is_constant():
            residuals[b] = poly.constant_term()
        else:
            residuals[b] = poly
    violated = sorted(g.terms)
    mx = 0.0
    for poly in g.terms.values():
        for c in poly.terms.values():
            mx = max(mx, abs(to_float(c)))
    return ConditionReport(residuals, not violated, violated, False, mx)


# ----------------------------------------------------------------------------
# Equation system


@dataclass
class _System:
    """Quadratic equations in the unknown coefficients, one per (b, u-power)."""

    eqs: list[Poly]
    labels: list[tuple]
    nvars: int
    nonzero: list[bool]
    pairs: list[tuple[int, ...]]  # variables that may not vanish simultaneously
    names: list[str]


def _build_system(cfg: Configuration, C: Sequence[tuple], polynomial: bool) -> _System:
    form = cfg.form
    m = cfg.r + 1
    k = len(C)
    nvars = 2 * k if polynomial else k
    nv = nvars + 1  # last slot is u
    U = nvars
    fs = []
    for i in range(k):
        if polynomial:
            fs.append(Poly.var(nv, 2 * i) * Poly.var(nv, U) + Poly.var(nv, 2 * i + 1))
        else:
            fs.append(Poly.var(nv, i))
    dfs = [f.diff(U) for f in fs]
    eu = (Fraction(0),) * (m - 1) + (Fraction(1),)
    jee = j_eval(form, eu, eu)
    by_b: dict = {}
    for i, a in enumerate(C):
        for j, c in enumerate(C):
            b = tuple(x + y for x, y in zip(a, c))
            term = fs[i] * fs[j] * j_eval(form, a, c)
            if polynomial:
                term = term + dfs[i] * fs[j] * j_eval(form, eu, c) + fs[i] * dfs[j] * j_eval(form, a, eu)
                term = term + dfs[i] * dfs[j] * jee
            by_b[b] = by_b[b] + term if b in by_b else term
    d = form.d_ext
    rhs = {}
    for w, a in cfg.weights:
        rhs[tuple(x + y for x, y in zip(d, tuple(w.entries) + (0,)))] = Poly.const(nv, a)
    rhs[tuple(d)] = Poly.const(nv, cfg.E - cfg.lam * (cfg.n + 1)) + Poly.var(nv, U, cfg.lam)
    eqs, labels = [], []
    for b in sorted(set(by_b) | set(rhs)):
        poly = by_b.get(b, Poly(nv)) - rhs.get(b, Poly(nv))
        for power in range(poly.degree(U) + 1):
            part = {}
            for mono, c in poly.terms.items():
                if mono[U] == power:
                    part[mono[:U] + (0,)] = c
            e = Poly(nv, part)
            # drop the u slot
            eqs.append(Poly(nvars, {mono[:U]: c for mono, c in e.terms.items()}))
            labels.append((b, power))
    if polynomial:
        names = [n for i in range(k) for n in (f"A{i}", f"B{i}")]
        nonzero = [False] * nvars
        pairs = [(2 * i, 2 * i + 1) for i in range(k)]
    else:
        names = [f"f{i}" for i in range(k)]
        nonzero = [True] * nvars
        pairs = []
    return _System(eqs, labels, nvars, nonzero, pairs, names)


def _vars_of(p: Poly) -> set[int]:
    return {i for mono in p.terms for i, e in enumerate(mono) if e}


@dataclass
class SolveResult:
    """All exact (or recognised) coefficient solutions of one exponent set."""

    solutions: list[SuperpotentialAnsatz]
    certificate: tuple | None = None
    used_newton: bool = False
    gauge_fixed: bool = False


class _Deferred(Exception):
    pass


def _roots_quadratic(a, b, c):
    """Real roots of a x^2 + b x + c inside the field; raises _Deferred if not representable."""
    if a == 0:
        return [-c * scalar_inverse(b)]
    disc = b * b - 4 * a * c
    sgn = scalar_sign(disc)
    if sgn < 0:
        return []
    root = scalar_sqrt(disc)
    if root is None:
        raise _Deferred()
    inv = scalar_inverse(2 * a)
    if sgn == 0:
        return [-b * inv]
    return [(-b + root) * inv, (-b - root) * inv]


class _Solver:
    def __init__(self, system: _System, newton_seeds: int = 32, seed: int = 0):
        self.sys = system
        self.solutions: list[dict[int, object]] = []
        self.certificate = None
        self.deferred_states: list[dict[int, object]] = []
        self.gauge_fixed = False
        self.newton_seeds = newton_seeds
        self.seed = seed

    def run(self):
        self._solve({}, list(range(len(self.sys.eqs))))

    def _fail(self, idx):
        if self.certificate is None:
            self.certificate = self.sys.labels[idx]

    def _valid_partial(self, assign) -> bool:
        for v, val in assign.items():
            if self.sys.nonzero[v] and val == 0:
                return False
        for pair in self.sys.pairs:
            if all(v in assign and assign[v] == 0 for v in pair):
                return False
        return True

    def _solve(self, assign: dict, active: list[int]):
        if not self._valid_partial(assign):
            return
        sys_ = self.sys
        current = []
        for idx in active:
            e = sys_.eqs[idx].substitute({v: assign[v] for v in _vars_of(sys_.eqs[idx]) if v in assign})
            if e.is_zero():
                continue
            if e.is_constant():
                self._fail(idx)
                return
            current.append((idx, e))
        free = [v for v in range(sys_.nvars) if v not in assign]
        if not current:
            # variables unconstrained by every equation: prefer zero where allowed
            new = dict(assign)
            for v in free:
                new[v] = Fraction(0) if not sys_.nonzero[v] else Fraction(1)
                self.gauge_fixed = True
            if self._valid_partial(new):
                self.solutions.append(new)
            return
        # single-unknown equations first
        for idx, e in current:
            vs = _vars_of(e)
            if len(vs) == 1:
                (v,) = vs
                a = b = c = Fraction(0)
                for mono, coef in e.terms.items():
                    if mono[v] == 2:
                        a = coef
                    elif mono[v] == 1:
                        b = coef
                    else:
                        c = coef
                if e.degree(v) > 2:
                    raise _Deferred()
                roots = _roots_quadratic(a, b, c)
                if not roots:
                    self._fail(idx)
                    return
                rest = [i for i, _ in current]
                for root in roots:
                    self._solve({**assign, v: root}, rest)
                return
        # binomial equations k x_i x_j + c = 0
        edges = []
        for idx, e in current:
            if len(e.terms) > 2:
                continue
            quad = [mono for mono in e.terms if sum(mono) == 2 and max(mono) == 1]
            consts = [mono for mono in e.terms if sum(mono) == 0]
            if len(quad) == 1 and len(quad) + len(consts) == len(e.terms):
                mono = quad[0]
                i, j = [t for t, x in enumerate(mono) if x]
                kc = e.terms[mono]
                cc = e.terms[consts[0]] if consts else Fraction(0)
                if cc == 0:
                    branches = [v for v in (i, j) if not sys_.nonzero[v]]
                    if not branches:
                        self._fail(idx)
                        return
                    rest = [t for t, _ in current]
                    for v in branches:
                        self._solve({**assign, v: Fraction(0)}, rest)
                    return
                edges.append((i, j, -cc * scalar_inverse(kc), idx))
        if edges:
            self._solve_graph(assign, current, edges)
            return
        self.deferred_states.append(dict(assign))

    def _solve_graph(self, assign, current, edges):
        sys_ = self.sys
        adj: dict[int, list] = {}
        for i, j, val, idx in edges:
            adj.setdefault(i, []).append((j, val, idx))
            adj.setdefault(j, []).append((i, val, idx))
        rest = [t for t, _ in current]
        # x_v = coef_v * t^{sign_v}, starting from the smallest vertex of the first component
        order = sorted(adj)
        if any(not sys_.nonzero[v] for v in order):
            # in polynomial mode prefer a constant-term unknown as the free scale
            order.sort(key=lambda v: (sys_.names[v][0] != "B", v))
        root = order[0]
        rep = {root: (Fraction(1), 1)}
        stack = [root]
        while stack:
            v = stack.pop()
            cv, sv = rep[v]
            for w, val, idx in adj[v]:
                cw, sw = val * scalar_inverse(cv), -sv
                if w not in rep:
                    rep[w] = (cw, sw)
                    stack.append(w)
                    continue
                ow, osw = rep[w]
                if osw == sw:
                    if ow != cw:
                        self._fail(idx)
                        return
                    continue
                # odd cycle: ow t^{osw} = cw t^{sw}  =>  t^{2 osw} = cw / ow
                t2 = cw * scalar_inverse(ow)
                if osw < 0:
                    t2 = scalar_inverse(t2)
                if scalar_sign(t2) <= 0:
                    self._fail(idx)
                    return
                t = scalar_sqrt(t2)
                if t is None:
                    raise _Deferred()
                for tv in (t, -t):
                    self._solve({**assign, root: tv}, rest)
                return
        # bipartite component: the product relations leave a free scale
        self.gauge_fixed = True
        self._solve({**assign, root: Fraction(1)}, rest)


def _float_system(system: _System):
    comp = []
    for e in system.eqs:
        mons = np.array(list(e.terms.keys()), dtype=float).reshape(-1, system.nvars)
        coefs = np.array([to_float(c) for c in e.terms.values()], dtype=float)
        comp.append((mons, coefs))

    def residual(x):
        out = np.empty(len(comp))
        for k, (mons, coefs) in enumerate(comp):
            out[k] = np.dot(coefs, np.prod(np.power(x, mons), axis=1)) if len(coefs) else 0.0
        return out

    def jac(x):
        J = np.zeros((len(comp), system.nvars))
        for k, (mons, coefs) in enumerate(comp):
            for v in range(system.nvars):
                ev = mons[:, v]
                mask = ev > 0
                if not mask.any():
                    continue
                mm = mons[mask].copy()
                mm[:, v] -= 1
                J[k, v] = np.dot(coefs[mask] * ev[mask], np.prod(np.power(x, mm), axis=1))
        return J

    return residual, jac


def _newton(system: _System, fixed: dict, seeds: int, seed: int, tol: float = 1e-10):
    """Damped Gauss-Newton from random starts; returns float solutions."""
    residual, jac = _float_system(system)
    rng = np.random.default_rng(seed)
    free = [v for v in range(system.nvars) if v not in fixed]
    base = np.zeros(system.nvars)
    for v, val in fixed.items():
        base[v] = to_float(val)
    found = []
    for _ in range(seeds):
        x = base.copy()
        mags = np.exp(rng.uniform(np.log(0.1), np.log(10.0), len(free)))
        signs = rng.choice([-1.0, 1.0], len(free))
        x[free] = mags * signs
        lam = 1e-3
        f = residual(x)
        nf = np.linalg.norm(f)
        for _it in range(200):
            if nf < tol:
                break
            J = jac(x)[:, free]
            A = J.T @ J + lam * np.eye(len(free))
            step = np.linalg.solve(A, -J.T @ f)
            xn = x.copy()
            xn[free] += step
            fn = residual(xn)
            nfn = np.linalg.norm(fn)
            if nfn < nf:
                x, f, nf = xn, fn, nfn
                lam = max(lam / 3, 1e-12)
            else:
                lam *= 4
                if lam > 1e8:
                    break
        if nf < tol:
            found.append(x.copy())
    return found


def _polish(system: _System, x: np.ndarray, dps: int = 40) -> list:
    """Refine a float root in extended precision with Newton least squares."""
    with mpmath.workdps(dps):
        xs = [mpmath.mpf(v) for v in x]
        for _ in range(30):
            F = []
            rows = []
            for e in system.eqs:
                val = mpmath.mpf(0)
                grad = [mpmath.mpf(0)] * system.nvars
                for mono, c in e.terms.items():
                    cf = c.mp(dps) if isinstance(c, Surd) else mpmath.mpf(c.numerator) / c.denominator
                    t = cf
                    for v, ex in enumerate(mono):
                        if ex:
                            t *= xs[v] ** ex
                    val += t
                    for v, ex in enumerate(mono):
                        if ex:
                            g = cf * ex * xs[v] ** (ex - 1)
                            for u, eu in enumerate(mono):
                                if u != v and eu:
                                    g *= xs[u] ** eu
                            grad[v] += g
                F.append(val)
                rows.append(grad)
            if max(abs(v) for v in F) < mpmath.mpf(10) ** (-(dps - 8)):
                break
            Jm = mpmath.matrix(rows)
            Fm = mpmath.matrix(F)
            try:
                step = mpmath.lu_solve(Jm.T * Jm, -(Jm.T * Fm))
            except ZeroDivisionError:
                break
            xs = [a + b for a, b in zip(xs, step)]
        res = max((abs(v) for v in F), default=mpmath.mpf(0))
        return xs, float(res)


def _recognise(v) -> object | None:
    """Guess sign*sqrt(p/q) for an extended-precision value."""
    if abs(v) < mpmath.mpf(10) ** -20:
        return Fraction(0)
    sq = Fraction(str(mpmath.nstr(v * v, 30))).limit_denominator(10 ** 6)
    if abs(mpmath.mpf(sq.numerator) / sq.denominator - v * v) > mpmath.mpf(10) ** -20 * max(1, abs(v * v)):
        return None
    root = sqrt_rational(sq)
    return root if v > 0 else -root


def _exact_ok(system: _System, assign: dict) -> bool:
    for e in system.eqs:
        if not e.substitute(assign).is_zero():
            return False
    return True


def _to_ansatz(C, system: _System, assign: dict, polynomial: bool, steady: bool, m: int) -> SuperpotentialAnsatz:
    nv = 2 * m
    entries = []
    for i, c in enumerate(C):
        if polynomial:
            A, B = assign[2 * i], assign[2 * i + 1]
            if isinstance(A, float) or isinstance(B, float):
                raise ValueError("numeric polynomial coefficients are not supported")
            coef = Poly.var(nv, nv - 1, A) + Poly.const(nv, B) if A != 0 else Poly.const(nv, B)
            if coef.is_constant():
                coef = coef.constant_term()
        else:
            coef = assign[i]
        entries.append((c, coef))
    return SuperpotentialAnsatz(tuple(entries), steady)


def _lead_sign(coef) -> int:
    if isinstance(coef, float):
        return 1 if coef > 0 else -1
    if isinstance(coef, Poly):
        b = coef.constant_term()
        if b != 0:
            return scalar_sign(b)
        return scalar_sign(next(iter(coef.terms.values())))
    return scalar_sign(coef)


def _gauge(ans: SuperpotentialAnsatz) -> SuperpotentialAnsatz:
    """Global sign chosen so that the lexicographically smallest exponent has a positive coefficient."""
    if not ans.entries or _lead_sign(ans.entries[0][1]) > 0:
        return ans
    return SuperpotentialAnsatz(tuple((c, _neg(coef)) for c, coef in ans.entries), ans.steady)


def _neg(coef):
    return -coef


def _ans_key(ans: SuperpotentialAnsatz):
    out = []
    for c, coef in ans.entries:
        if isinstance(coef, Poly):
            out.append((c, tuple(sorted((mono, to_float(v)) for mono, v in coef.terms.items()))))
        else:
            out.append((c, to_float(coef)))
    return tuple(out)


def solve_detailed(
    cfg: Configuration,
    C: Sequence[Sequence],
    polynomial: bool = False,
    newton_seeds: int = 32,
    seed: int = 0,
) -> SolveResult:
    """Solve the quadratic coefficient system for exponent set C.

    Unknowns are peeled off one at a time: single-unknown equations are solved
    by the quadratic formula inside the field of square roots, and pure
    product relations ``f_a f_c = const`` are propagated along their graph
    (odd cycles fix a square, even components leave a free scale that is set
    to 1).  Whatever remains is handed to a damped Gauss-Newton search whose
    roots are polished in extended precision and, where possible, recognised
    as exact radicals and re-verified.
    """
    C = [qvec(c) for c in C]
    if len(C) != len(set(C)):
        raise ValueError("duplicate exponent vectors")
    if not C:
        raise ValueError("empty exponent set")
    if len(C) > MAX_C:
        raise ValueError(f"at most {MAX_C} exponent vectors are supported")
    C = sorted(C)
    m = cfg.r + 1
    steady = cfg.lam == 0
    system = _build_system(cfg, C, polynomial)
    solver = _Solver(system, newton_seeds, seed)
    used_newton = False
    try:
        solver.run()
        deferred = solver.deferred_states
    except _Deferred:
        deferred = [{}]
    raw: list[dict] = [s for s in solver.solutions if _exact_ok(system, s)]
    if solver.solutions and not raw:
        # a free scale choice did not survive; search the whole system numerically
        deferred = [{}]
    numeric: list[dict] = []
    for state in deferred:
        used_newton = True
        for x in _newton(system, state, newton_seeds, seed):
            xs, res = _polish(system, x)
            if res > 1e-12:
                continue
            guess = {}
            for v in range(system.nvars):
                g = _recognise(xs[v])
                if g is None:
                    guess = None
                    break
                guess[v] = g
            if guess is not None and solver._valid_partial(guess) and _exact_ok(system, guess):
                raw.append(guess)
            else:
                vals = {v: float(xs[v]) for v in range(system.nvars)}
                if all(abs(vals[v]) > 1e-8 for v in range(system.nvars) if system.nonzero[v]):
                    numeric.append(vals)
    out = []
    seen = set()
    for assign in raw + ([] if raw else numeric):
        if polynomial and any(isinstance(v, float) for v in assign.values()):
            continue
        ans = _gauge(_to_ansatz(C, system, assign, polynomial, steady, m))
        key = _ans_key(ans)
        if key in seen:
            continue
        seen.add(key)
        out.append(ans)
    out.sort(key=_ans_key)
    cert = None if out else solver.certificate
    return SolveResult(out, cert, used_newton, solver.gauge_fixed)


def solve_coefficients(cfg: Configuration, C: Sequence[Sequence], polynomial: bool = False):
    """First solution in the sign gauge, or None (see :func:`solve_detailed` for the certificate)."""
    res = solve_detailed(cfg, C, polynomial)
    return res.solutions[0] if res.solutions else None


# ----------------------------------------------------------------------------
# Bounded search


@dataclass
class SearchResult:
    found: list[SuperpotentialAnsatz]
    pruned_counts: dict[str, int]
    lattice_bound: int
    max_extra: int
    partial: bool = False
    candidates_examined: int = 0
    exponent_sets: list[list[tuple]] = field(default_factory=list)
    polynomial: bool = False


def _lattice(cfg: Configuration, bound: int, off_p: bool) -> list[tuple[Fraction, ...]]:
    r = cfg.r
    rng = range(-bound, bound + 1)
    out = []
    for x in itertools.product(rng, repeat=r + (1 if off_p else 0)):
        out.append(from_x(cfg, x))
    return out


def _targets(cfg: Configuration) -> list[tuple[Fraction, ...]]:
    """Sums b that must be realised: d + w for w in W, and d when the right side there is nonzero."""
    d = cfg.form.d_ext
    out = [tuple(x + y for x, y in zip(d, tuple(w.entries) + (0,))) for w, _ in cfg.weights]
    if cfg.E - cfg.lam * (cfg.n + 1) != 0 or cfg.lam != 0:
        out.append(tuple(d))
    return sorted(set(out))


def _base_points(cfg: Configuration) -> list[tuple[Fraction, ...]]:
    """(d + W~)/2 with W~ = W plus the origin."""
    pts = {from_x(cfg, w.entries) for w, _ in cfg.weights}
    pts.add(from_x(cfg, (0,) * cfg.r))
    return sorted(pts)


def _prune(cfg, form, C, targets, target_set, null_cache, need_null) -> str | None:
    sums: dict = {}
    for i, a in enumerate(C):
        for c in C[i:]:
            b = tuple(x + y for x, y in zip(a, c))
            sums.setdefault(b, []).append((a, c))
    for t in targets:
        if t not in sums:
            return "sum_cover"
    for b, pairs in sums.items():
        if len(pairs) == 1 and b not in target_set:
            a, c = pairs[0]
            if j_eval(form, a, c) != 0:
                return "unique_sum"
    return None


def _solve_candidate(args):
    cfg, C, polynomial = args
    res = solve_detailed(cfg, C, polynomial)
    return C, res.solutions


def search(
    cfg: Configuration,
    lattice_bound: int = 3,
    max_extra: int = 4,
    polynomial: bool | None = None,
    off_p: bool = False,
    threads: int = 1,
    budget: int = 200_000,
    time_budget: float | None = None,
) -> SearchResult:
    """Enumerate exponent sets within the lattice box and solve each survivor.

    Candidate sets are built as V + S.  V mixes points of (d + W~)/2 with at
    most ``max_extra`` J-null lattice points, so every hull vertex is null or
    lies in (d + W~)/2 by construction.  S adds lattice points that are
    neither null nor in (d + W~)/2 and lie inside conv(V), within the same
    ``max_extra`` budget for points outside (d + W~)/2.  Surviving sets must
    contain conv((d + W~)/2), have a null vertex when E != 0, realise every
    required sum, and pass the unique-sum test before the solver runs.
    """
    if cfg.r > 4 or lattice_bound > 4 or max_extra > 4:
        raise ValueError("search bounds exceed r <= 4, lattice_bound <= 4, max_extra <= 4")
    if polynomial is None:
        polynomial = cfg.lam != 0 and cfg.n == 1
    start = time.monotonic()
    form = cfg.form
    base = _base_points(cfg)
    targets = _targets(cfg)
    target_set = set(targets)
    lattice = _lattice(cfg, lattice_bound, off_p)
    lattice_set = set(lattice)
    nulls = sorted(p for p in lattice if is_null(form, p) and p not in base)
    null_set = set(nulls)
    fillers = [p for p in lattice if p not in null_set and p not in base]
    counts = {"hull_cover": 0, "null_vertex": 0, "sum_cover": 0, "unique_sum": 0, "unsolvable": 0, "too_large": 0}
    need_null = cfg.E != 0
    seen: set = set()
    candidates: list[list[tuple]] = []
    partial = False
    examined = 0

    def over_budget():
        if examined >= budget:
            return True
        return time_budget is not None and time.monotonic() - start > time_budget

    base_subsets = [s for k in range(len(base) + 1) for s in itertools.combinations(base, k)]
    null_subsets = [s for k in range(max_extra + 1) for s in itertools.combinations(nulls, k)]
    for ns in null_subsets:
        if partial:
            break
        for bs in base_subsets:
            V = list(bs) + list(ns)
            if not V:
                continue
            if over_budget():
                partial = True
                break
            if not all(p in V or in_hull(p, V) for p in base):
                counts["hull_cover"] += 1
                continue
            verts = hull_vertices(V)
            if need_null and not any(is_null(form, v) for v in verts):
                counts["null_vertex"] += 1
                continue
            room = max_extra - len(ns)
            lo = [min(p[i] for p in V) for i in range(len(V[0]))]
            hi = [max(p[i] for p in V) for i in range(len(V[0]))]
            inside = [
                p for p in fillers
                if all(l <= x <= h for x, l, h in zip(p, lo, hi)) and in_hull(p, V)
            ]
            for k in range(room + 1):
                for S in itertools.combinations(inside, k):
                    examined += 1
                    C = tuple(sorted(V + list(S)))
                    if C in seen:
                        continue
                    seen.add(C)
                    if len(C) > MAX_C:
                        counts["too_large"] += 1
                        continue
                    why = _prune(cfg, form, list(C), targets, target_set, None, need_null)
                    if why:
                        counts[why] += 1
                        continue
                    candidates.append(list(C))
    threads = max(1, int(threads))
    jobs = [(cfg, C, polynomial) for C in candidates]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_solve_candidate, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        results = [_solve_candidate(j) for j in jobs]
    found = []
    sets = []
    for C, sols in sorted(results, key=lambda t: t[0]):
        if sols:
            found.append(sols[0])
            sets.append(C)
        else:
            counts["unsolvable"] += 1
    del lattice_set
    return SearchResult(found, counts, lattice_bound, max_extra, partial, examined, sets, polynomial)


# ----------------------------------------------------------------------------
# (a, b) signature


def ab_signature(cfg: Configuration, C: Sequence[Sequence]) -> tuple[int, int]:
    """Numbers of hull vertices of C with s > -1 and with s < -1, where s((d+x)/2) = sum x_i."""
    pts = [qvec(c) for c in C]
    if any(p[-1] != -1 for p in pts):
        raise ValueError("C must lie in the hyperplane P")
    a = b = 0
    for v in hull_vertices(pts):
        s = sum(to_x(cfg, v)[:-1])
        if s > -1:
            a += 1
        elif s < -1:
            b += 1
    return a, b


# ----------------------------------------------------------------------------
# Known ansatze


def case5_ansatz(cfg: Configuration, sign: int = 1) -> SuperpotentialAnsatz:
    """Closed-form coefficients of the r=3, d=(1,2,2) superpotential.

    With A1 = A_(0,0,-1), A2 = A_(0,-1,0):  f_v = sqrt(E A1/A2),
    f_{-v} = sqrt(E A2/A1), f_u = (2/sqrt E) sqrt(A1 A2),
    f_x = sign*sqrt(-2 A_(1,0,-2)), f_y = -sign*sqrt(-2 A_(1,-2,0)),
    where v = (0,1,-1), u = (0,-1,-1), x = (1,0,-2), y = (1,-2,0).
    """
    wm = cfg.weight_map
    A1, A2 = wm[(0, 0, -1)], wm[(0, -1, 0)]
    Ax, Ay = wm[(1, 0, -2)], wm[(1, -2, 0)]
    E = cfg.E
    fv = sqrt_rational(E * A1 / A2)
    fmv = sqrt_rational(E * A2 / A1)
    fu = 2 * sqrt_rational(A1 * A2) * scalar_inverse(sqrt_rational(E))
    fx = sign * sqrt_rational(-2 * Ax)
    fy = -sign * sqrt_rational(-2 * Ay)
    return SuperpotentialAnsatz((
        (from_x(cfg, (0, 1, -1)), fv),
        (from_x(cfg, (0, -1, 1)), fmv),
        (from_x(cfg, (0, -1, -1)), fu),
        (from_x(cfg, (1, 0, -2)), fx),
        (from_x(cfg, (1, -2, 0)), fy),
    ))


def bryant_n1_ansatz(cfg: Configuration, a=1) -> SuperpotentialAnsatz:
    """f = a e^{q-u} + (1/a)(lam u + E - lam n) e^{-u} for d = (1)."""
    if cfg.dims != (1,):
        raise ValueError("requires d = (1)")
    a = as_scalar(a)
    nv = 4
    inv = scalar_inverse(a)
    f2 = Poly.var(nv, 3, cfg.lam * inv) + Poly.const(nv, (cfg.E - cfg.lam * cfg.n) * inv)
    coef2 = f2 if not f2.is_constant() else f2.constant_term()
    return SuperpotentialAnsatz((((Fraction(1), Fraction(-1)), a), ((Fraction(0), Fraction(-1)), coef2)),
                                steady=cfg.lam == 0)


# ----------------------------------------------------------------------------
# JSON


def _scalar_json(c):
    if isinstance(c, float):
        return {"float": repr(c)}
    try:
        rs = RadicalScalar.from_value(c)
        return {"sign": rs.sign, "radicand": str(rs.radicand)}
    except ValueError:
        return {"surd": [{"coeff": str(v), "sqrt": m} for m, v in sorted(c.terms.items())]}


def _scalar_from_json(obj):
    if isinstance(obj, (str, int)) and not isinstance(obj, bool):
        return parse_rational(obj)
    if not isinstance(obj, dict):
        raise ValueError(f"unrecognised coefficient {obj!r}")
    if "float" in obj:
        return float(obj["float"])
    if "surd" in obj:
        return Surd({int(t["sqrt"]): parse_rational(t["coeff"]) for t in obj["surd"]})
    return RadicalScalar(int(obj["sign"]), parse_rational(obj["radicand"])).value


def ansatz_to_dict(ans: SuperpotentialAnsatz) -> dict:
    entries = []
    for c, coef in ans.entries:
        item = {"c": [str(x) for x in c]}
        if isinstance(coef, Poly):
            nv = coef.nv
            ucoef = coef.diff(nv - 1).constant_term()
            item["coef"] = {"u": _scalar_json(ucoef), "const": _scalar_json(coef.constant_term())}
        else:
            item["coef"] = _scalar_json(coef)
        entries.append(item)
    return {"steady": ans.steady, "entries": entries}


def ansatz_from_dict(data: dict, m: int | None = None) -> SuperpotentialAnsatz:
    if not isinstance(data, dict) or "entries" not in data:
        raise ValueError("ansatz must be an object with 'entries'")
    entries = []
    if not isinstance(data["entries"], list):
        raise ValueError("'entries' must be a list")
    for item in data["entries"]:
        if not isinstance(item, dict) or "c" not in item or "coef" not in item:
            raise ValueError("each entry needs 'c' and 'coef'")
        c = tuple(parse_rational(x) for x in item["c"])
        mm = m or len(c)
        if m is not None and len(c) != m:
            raise ValueError(f"exponent {item['c']} should have {m} entries")
        coef = item["coef"]
        if isinstance(coef, dict) and "u" in coef:
            nv = 2 * mm
            coef = Poly.var(nv, nv - 1, _scalar_from_json(coef["u"])) + Poly.const(nv, _scalar_from_json(coef["const"]))
            if coef.is_constant():
                coef = coef.constant_term()
        else:
            coef = _scalar_from_json(coef)
        entries.append((c, coef))
    return SuperpotentialAnsatz(tuple(entries), bool(data.get("steady", True)))


def search_result_to_dict(res: SearchResult) -> dict:
    return {
        "lattice_bound": res.lattice_bound,
        "max_extra": res.max_extra,
        "polynomial": res.polynomial,
        "partial": res.partial,
        "candidates_examined": res.candidates_examined,
        "pruned_counts": dict(sorted(res.pruned_counts.items())),
        "found": [ansatz_to_dict(a) for a in res.found],
    }
