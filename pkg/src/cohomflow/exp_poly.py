"""Exponential polynomials on phase space.

An :class:`ExpPoly` is a finite sum ``sum_b P_b(p, phi, q, u) * exp(b . (q, u))``
with rational exponent vectors ``b`` of length ``m = r + 1`` and polynomial
coefficients ``P_b`` in the ``2m`` phase-space variables.  Coefficients of the
polynomials are exact (:class:`~fractions.Fraction` or
:class:`~cohomflow.surd.Surd`).

Variable layout inside a :class:`Poly` monomial: ``p_1..p_r, phi`` occupy
indices ``0..r`` and ``q_1..q_r, u`` occupy ``m..2m-1``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .surd import Surd, as_scalar, scalar_inverse, to_float

__all__ = [
    "Poly",
    "ExpPoly",
    "var_names",
    "hamiltonian",
    "j_poly",
    "gradient_q",
    "gradient_p",
    "poisson",
    "divides",
    "substitute_momenta",
    "render",
    "parse",
    "EXP_CLAMP",
]

EXP_CLAMP = 700.0


def var_names(m: int) -> list[str]:
    r = m - 1
    return [f"p{i + 1}" for i in range(r)] + ["phi"] + [f"q{i + 1}" for i in range(r)] + ["u"]


def _is_zero(c) -> bool:
    return c == 0


class Poly:
    """Sparse multivariate polynomial with exact coefficients."""

    __slots__ = ("nv", "terms")

    def __init__(self, nv: int, terms: dict | None = None):
        self.nv = nv
        self.terms = {}
        for mono, c in (terms or {}).items():
            if len(mono) != nv:
                raise ValueError("monomial length mismatch")
            if not _is_zero(c):
                self.terms[tuple(mono)] = c if isinstance(c, Surd) else Fraction(c)

    @classmethod
    def const(cls, nv: int, c) -> "Poly":
        return cls(nv, {(0,) * nv: as_scalar(c)})

    @classmethod
    def var(cls, nv: int, i: int, c=1) -> "Poly":
        mono = [0] * nv
        mono[i] = 1
        return cls(nv, {tuple(mono): as_scalar(c)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(mono) for mono in self.terms)

    def constant_term(self):
        return self.terms.get((0,) * self.nv, Fraction(0))

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nv == other.nv and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nv, frozenset(self.terms.items())))

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for mono, c in other.terms.items():
            v = out.get(mono, 0) + c
            if _is_zero(v):
                out.pop(mono, None)
            else:
                out[mono] = v
        return Poly._raw(self.nv, out)

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nv, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                v = out.get(mono, 0) + c1 * c2
                if _is_zero(v):
                    out.pop(mono, None)
                else:
                    out[mono] = v
        return Poly._raw(self.nv, out)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = as_scalar(c)
        if _is_zero(c):
            return Poly(self.nv)
        return Poly._raw(self.nv, {k: v * c for k, v in self.terms.items()})

    @classmethod
    def _raw(cls, nv, terms):
        obj = cls.__new__(cls)
        obj.nv = nv
        obj.terms = {k: (Fraction(v) if isinstance(v, int) else v) for k, v in terms.items() if not _is_zero(v)}
        return obj

    def diff(self, i: int) -> "Poly":
        out = {}
        for mono, c in self.terms.items():
            e = mono[i]
            if e:
                new = list(mono)
                new[i] = e - 1
                out[tuple(new)] = c * e
        return Poly._raw(self.nv, out)

    def degree(self, i: int) -> int:
        return max((mono[i] for mono in self.terms), default=0)

    def total_degree(self) -> int:
        return max((sum(mono) for mono in self.terms), default=0)

    def evaluate(self, x: Sequence[float]) -> float:
        total = 0.0
        for mono, c in self.terms.items():
            t = to_float(c)
            for xi, e in zip(x, mono):
                if e:
                    t *= xi ** e
            total += t
        return total

    def substitute(self, values: dict[int, object]) -> "Poly":
        """Replace some variables by exact scalars."""
        out = Poly(self.nv)
        for mono, c in self.terms.items():
            coef = c
            new = list(mono)
            for i, val in values.items():
                if new[i]:
                    coef = coef * as_scalar(val) ** new[i]
                    new[i] = 0
            out = out + Poly(self.nv, {tuple(new): coef})
        return out

    def __repr__(self):
        return f"Poly({render_poly(self, var_names(self.nv // 2))})"


def _fmt_scalar(c) -> str:
    s = str(c)
    if isinstance(c, Surd) and len(c.terms) > 1:
        return f"({s})"
    return s


def render_poly(p: Poly, names: list[str]) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for mono in sorted(p.terms, key=lambda m: (-sum(m), tuple(-e for e in m))):
        c = p.terms[mono]
        factors = []
        for name, e in zip(names, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}**{e}")
        if not factors:
            parts.append(_fmt_scalar(c))
        elif c == 1:
            parts.append("*".join(factors))
        elif c == -1:
            parts.append("-" + "*".join(factors))
        else:
            parts.append(_fmt_scalar(c) + "*" + "*".join(factors))
    text = " + ".join(parts)
    return text.replace("+ -", "- ")


class ExpPoly:
    """Sum of polynomial coefficients times exponentials exp(b . q_ext)."""

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: dict | None = None):
        self.m = m
        self.terms: dict[tuple[Fraction, ...], Poly] = {}
        for b, poly in (terms or {}).items():
            b = tuple(Fraction(x) for x in b)
            if len(b) != m:
                raise ValueError("exponent length mismatch")
            if not isinstance(poly, Poly):
                poly = Poly.const(2 * m, poly)
            if poly.nv != 2 * m:
                raise ValueError("polynomial has the wrong number of variables")
            if b in self.terms:
                poly = self.terms[b] + poly
            if poly.is_zero():
                self.terms.pop(b, None)
            else:
                self.terms[b] = poly

    # construction helpers ----------------------------------------------------
    @classmethod
    def zero(cls, m: int) -> "ExpPoly":
        return cls(m)

    @classmethod
    def const(cls, m: int, c) -> "ExpPoly":
        return cls(m, {(0,) * m: Poly.const(2 * m, c)})

    @classmethod
    def exp(cls, b: Sequence, c=1) -> "ExpPoly":
        m = len(b)
        return cls(m, {tuple(b): Poly.const(2 * m, c)})

    @classmethod
    def var(cls, m: int, i: int, c=1) -> "ExpPoly":
        return cls(m, {(0,) * m: Poly.var(2 * m, i, c)})

    @classmethod
    def p(cls, m: int, i: int) -> "ExpPoly":
        return cls.var(m, i)

    @classmethod
    def q(cls, m: int, i: int) -> "ExpPoly":
        return cls.var(m, m + i)

    @classmethod
    def _raw(cls, m, terms):
        obj = cls.__new__(cls)
        obj.m = m
        obj.terms = {b: p for b, p in terms.items() if not p.is_zero()}
        return obj

    # algebra -------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, ExpPoly):
            return self.m == other.m and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == ExpPoly.const(self.m, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def _coerce(self, other) -> "ExpPoly":
        if isinstance(other, ExpPoly):
            if other.m != self.m:
                raise ValueError("ExpPoly dimension mismatch")
            return other
        return ExpPoly.const(self.m, other)

    def __add__(self, other) -> "ExpPoly":
        other = self._coerce(other)
        out = dict(self.terms)
        for b, p in other.terms.items():
            out[b] = out[b] + p if b in out else p
        return ExpPoly._raw(self.m, out)

    __radd__ = __add__

    def __neg__(self) -> "ExpPoly":
        return ExpPoly._raw(self.m, {b: -p for b, p in self.terms.items()})

    def __sub__(self, other) -> "ExpPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "ExpPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            if isinstance(other, Poly):
                other = ExpPoly(self.m, {(0,) * self.m: other})
            else:
                c = as_scalar(other)
                return ExpPoly._raw(self.m, {b: p.scale(c) for b, p in self.terms.items()})
        out: dict = {}
        for b1, p1 in self.terms.items():
            for b2, p2 in other.terms.items():
                b = tuple(x + y for x, y in zip(b1, b2))
                prod = p1 * p2
                out[b] = out[b] + prod if b in out else prod
        return ExpPoly._raw(self.m, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ExpPoly":
        out = ExpPoly.const(self.m, 1)
        for _ in range(k):
            out = out * self
        return out

    # calculus ------------------------------------------------------------------
    def dq(self, i: int) -> "ExpPoly":
        """Partial derivative along the i-th extended position coordinate (u is i = r)."""
        out = {}
        for b, p in self.terms.items():
            d = p.diff(self.m + i)
            if b[i] != 0:
                d = d + p.scale(b[i])
            out[b] = d
        return ExpPoly._raw(self.m, out)

    def dp(self, i: int) -> "ExpPoly":
        """Partial derivative along the i-th extended momentum (phi is i = r)."""
        return ExpPoly._raw(self.m, {b: p.diff(i) for b, p in self.terms.items()})

    # inspection ----------------------------------------------------------------
    def exponents(self) -> list[tuple[Fraction, ...]]:
        return sorted(self.terms)

    def uses_var(self, i: int) -> bool:
        return any(p.degree(i) > 0 for p in self.terms.values())

    def evaluate(self, p: Sequence[float], q: Sequence[float]) -> float:
        """Double-precision value at extended momenta p and positions q."""
        x = list(p) + list(q)
        total = 0.0
        for b, poly in self.terms.items():
            arg = sum(float(bi) * qi for bi, qi in zip(b, q))
            arg = min(max(arg, -EXP_CLAMP), EXP_CLAMP)
            total += poly.evaluate(x) * math.exp(arg)
        return total

    def compile(self) -> "CompiledExpPoly":
        return CompiledExpPoly(self)

    def __repr__(self):
        return f"ExpPoly({render(self)})"

    def __str__(self):
        return render(self)


class CompiledExpPoly:
    """Vectorised numeric evaluator for a fixed ExpPoly."""

    def __init__(self, f: ExpPoly):
        self.m = f.m
        rows, mon, coef, owner = [], [], [], []
        for k, (b, poly) in enumerate(sorted(f.terms.items())):
            rows.append([float(x) for x in b])
            for mono, c in poly.terms.items():
                mon.append(mono)
                coef.append(to_float(c))
                owner.append(k)
        self.B = np.array(rows, dtype=float).reshape(-1, self.m)
        self.mon = np.array(mon, dtype=float).reshape(-1, 2 * self.m)
        self.coef = np.array(coef, dtype=float)
        self.owner = np.array(owner, dtype=int)
        self.trivial_mon = not self.mon.any() if len(self.mon) else True

    def __call__(self, p: Sequence[float], q: Sequence[float]) -> float:
        if not len(self.coef):
            return 0.0
        q = np.asarray(q, dtype=float)
        e = np.exp(np.clip(self.B @ q, -EXP_CLAMP, EXP_CLAMP))
        if self.trivial_mon:
            vals = self.coef
        else:
            x = np.concatenate([np.asarray(p, dtype=float), q])
            vals = self.coef * np.prod(np.power(x, self.mon), axis=1)
        return float(np.dot(vals, e[self.owner]))


# ----------------------------------------------------------------------------
# Phase-space operations


def gradient_q(f: ExpPoly) -> list[ExpPoly]:
    return [f.dq(i) for i in range(f.m)]


def gradient_p(f: ExpPoly) -> list[ExpPoly]:
    return [f.dp(i) for i in range(f.m)]


def poisson(f: ExpPoly, g: ExpPoly) -> ExpPoly:
    """{f, g} = sum_i df/dq_i dg/dp_i - df/dp_i dg/dq_i over (q_i, p_i) and (u, phi)."""
    if f.m != g.m:
        raise ValueError("ExpPoly dimension mismatch")
    out = ExpPoly.zero(f.m)
    for i in range(f.m):
        out = out + f.dq(i) * g.dp(i) - f.dp(i) * g.dq(i)
    return out


def j_poly(dims: Sequence[int]) -> Poly:
    """J(p, p) as a polynomial in the momentum variables."""
    r = len(dims)
    m = r + 1
    nv = 2 * m
    n = sum(dims)
    out = Poly(nv)
    for i, d in enumerate(dims):
        mono = [0] * nv
        mono[i] = 2
        out = out + Poly(nv, {tuple(mono): Fraction(-1, d)})
        mono = [0] * nv
        mono[i] = 1
        mono[r] = 1
        out = out + Poly(nv, {tuple(mono): Fraction(-1)})
    mono = [0] * nv
    mono[r] = 2
    return out + Poly(nv, {tuple(mono): Fraction(-(n - 1), 4)})


def hamiltonian(cfg) -> ExpPoly:
    """H = e^{-d.q/2} J(p) - e^{d.q/2} (E - lam(n+1) + lam u) - sum_w A_w e^{(d/2 + w).q}."""
    r = cfg.r
    m = r + 1
    nv = 2 * m
    half_d = tuple(Fraction(d, 2) for d in cfg.dims) + (Fraction(-1),)
    terms = {tuple(-x for x in half_d): j_poly(cfg.dims)}
    pot = Poly.const(nv, -(cfg.E - cfg.lam * (cfg.n + 1))) + Poly.var(nv, nv - 1, -cfg.lam)
    h = ExpPoly(m, terms) + ExpPoly(m, {half_d: pot})
    for w, a in cfg.weights:
        b = tuple(x + y for x, y in zip(half_d, tuple(w.entries) + (0,)))
        h = h + ExpPoly(m, {b: Poly.const(nv, -a)})
    return h


def substitute_momenta(f: ExpPoly, values: Sequence[ExpPoly]) -> ExpPoly:
    """Replace each momentum p_i (and phi) by the ExpPoly values[i]."""
    m = f.m
    if len(values) != m:
        raise ValueError("need one value per extended momentum")
    nv = 2 * m
    cache: dict[tuple[int, int], ExpPoly] = {}

    def power(i, k):
        if (i, k) not in cache:
            cache[(i, k)] = values[i] ** k
        return cache[(i, k)]

    out = ExpPoly.zero(m)
    for b, poly in f.terms.items():
        for mono, c in poly.terms.items():
            rest = tuple([0] * m) + mono[m:]
            term = ExpPoly(m, {b: Poly(nv, {rest: c})})
            for i in range(m):
                if mono[i]:
                    term = term * power(i, mono[i])
            out = out + term
    return out


# ----------------------------------------------------------------------------
# Exact division


def _lead(f: ExpPoly):
    """Leading term: lowest exponent vector, then the graded-lex largest monomial."""
    b = min(f.terms)
    poly = f.terms[b]
    mono = max(poly.terms, key=lambda mo: (sum(mo), mo))
    return b, mono, poly.terms[mono]


def divides(candidate: ExpPoly, product: ExpPoly) -> ExpPoly | None:
    """Return phi with product == phi * candidate, or None if no such ExpPoly exists.

    Division runs against the lowest exponent vector of the candidate.  Every
    quotient term must fit inside the exponent box and degree bounds implied
    by the two supports, which both guarantees termination and rejects
    non-divisible inputs early.
    """
    if candidate.is_zero():
        raise ZeroDivisionError("division by the zero ExpPoly")
    m = candidate.m
    if product.is_zero():
        return ExpPoly.zero(m)
    nv = 2 * m
    cb = list(candidate.terms)
    pb = list(product.terms)
    lo = [min(b[i] for b in pb) - min(b[i] for b in cb) for i in range(m)]
    hi = [max(b[i] for b in pb) - max(b[i] for b in cb) for i in range(m)]
    cdeg = [max(p.degree(j) for p in candidate.terms.values()) for j in range(nv)]
    pdeg = [max(p.degree(j) for p in product.terms.values()) for j in range(nv)]
    lead_b, lead_mono, lead_c = _lead(candidate)
    inv = scalar_inverse(lead_c)
    quotient = ExpPoly.zero(m)
    rem = product
    while not rem.is_zero():
        b, mono, c = _lead(rem)
        qb = tuple(x - y for x, y in zip(b, lead_b))
        qmono = tuple(x - y for x, y in zip(mono, lead_mono))
        if any(e < 0 for e in qmono):
            return None
        if any(x < l or x > h for x, l, h in zip(qb, lo, hi)):
            return None
        if any(e > pd - cd for e, pd, cd in zip(qmono, pdeg, cdeg)):
            return None
        term = ExpPoly(m, {qb: Poly(nv, {qmono: c * inv})})
        quotient = quotient + term
        rem = rem - term * candidate
    return quotient


# ----------------------------------------------------------------------------
# Text form


def _fmt_exponent(b: Sequence[Fraction], names: list[str]) -> str:
    parts = []
    for x, name in zip(b, names):
        if x == 0:
            continue
        if x == 1:
            parts.append(name)
        elif x == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"{x}*{name}")
    if not parts:
        return "0"
    return " + ".join(parts).replace("+ -", "- ")


def render(f: ExpPoly) -> str:
    """Text form: terms ``(coeff-poly)*exp(dot-product)`` joined by `` + ``."""
    if f.is_zero():
        return "0"
    names = var_names(f.m)
    pos_names = names[f.m:]
    out = []
    for b in sorted(f.terms):
        out.append(f"({render_poly(f.terms[b], names)})*exp({_fmt_exponent(b, pos_names)})")
    return " + ".join(out)


def _sympy_scalar(x):
    """Convert a sympy number of the form sum q_k sqrt(r_k) to an exact scalar."""
    import sympy

    if x.is_Rational:
        return Fraction(int(x.p), int(x.q))
    total = Fraction(0)
    for term in sympy.Add.make_args(sympy.expand(x)):
        coeff, rest = term.as_coeff_Mul()
        c = Fraction(int(coeff.p), int(coeff.q))
        if rest == 1:
            total = total + c
            continue
        base, expo = rest.as_base_exp()
        if expo != sympy.Rational(1, 2) or not base.is_Rational:
            raise ValueError(f"unsupported coefficient {x}")
        # sqrt(a/b) = sqrt(ab)/b
        total = total + Surd({int(base.p) * int(base.q): c / int(base.q)})
    return total


def parse(text: str, m: int, cfg=None) -> ExpPoly:
    """Parse the text form (or any sympy-readable expression in exp(...)).

    Recognised names: ``p1..pr, phi, q1..qr, u``, ``exp``, ``sqrt``; with a
    configuration, also ``J`` (the kinetic polynomial J(p)), ``E`` and
    ``lambda``.
    """
    import sympy

    names = var_names(m)
    syms = sympy.symbols(names)
    local = {nm: s for nm, s in zip(names, syms)}
    local["exp"] = sympy.exp
    local["sqrt"] = sympy.sqrt
    jsym = sympy.Symbol("J__")
    if cfg is not None:
        local["J"] = jsym
        local["E"] = sympy.Rational(cfg.E.numerator, cfg.E.denominator)
        local["lam"] = sympy.Rational(cfg.lam.numerator, cfg.lam.denominator)
    src = text.replace("^", "**")
    if cfg is not None:
        import re

        src = re.sub(r"\blambda\b", "lam", src)
    expr = sympy.parse_expr(src, local_dict=local, evaluate=True)
    if cfg is not None:
        jp = j_poly(cfg.dims)
        jexpr = sum(
            (sympy.nsimplify(str(c)) if isinstance(c, Surd) else sympy.Rational(c.numerator, c.denominator))
            * sympy.Mul(*[s ** e for s, e in zip(syms, mono)])
            for mono, c in jp.terms.items()
        )
        expr = expr.subs(jsym, jexpr)
    expr = sympy.expand(sympy.powsimp(sympy.expand(expr), combine="exp"))
    pos_syms = syms[m:]
    nv = 2 * m
    out = ExpPoly.zero(m)
    for term in sympy.Add.make_args(expr):
        if term == 0:
            continue
        b = [Fraction(0)] * m
        poly_part = sympy.Integer(1)
        for factor in sympy.Mul.make_args(term):
            base, expo = factor.as_base_exp()
            if factor.func is sympy.exp or base is sympy.E:
                arg = sympy.expand(factor.args[0] if factor.func is sympy.exp else expo)
                lin = sympy.Poly(arg, *pos_syms)
                if lin.total_degree() > 1 or lin.coeff_monomial(1) != 0:
                    raise ValueError(f"exponent must be linear in q, u: {arg}")
                for i, s in enumerate(pos_syms):
                    c = lin.coeff_monomial(s)
                    b[i] += Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q))
            else:
                poly_part = poly_part * factor
        sp = sympy.Poly(poly_part, *syms)
        terms = {}
        for mono, c in sp.terms():
            terms[tuple(int(e) for e in mono)] = _sympy_scalar(c)
        out = out + ExpPoly(m, {tuple(b): Poly(nv, terms)})
    return out
