"""Exact arithmetic with square roots of rationals.

Two number types live here:

* :class:`Surd` -- an element of a multi-quadratic field Q(sqrt(m1), sqrt(m2), ...),
  stored as a rational linear combination of square roots of square-free
  integers.  Sums and products of square roots stay exact, and equality is
  decided exactly because distinct square-free roots are linearly independent
  over Q.
* :class:`RadicalScalar` -- a single signed radical ``sign * sqrt(radicand)``,
  the form in which superpotential coefficients are reported.

Arithmetic on :class:`Surd` returns a plain :class:`fractions.Fraction` whenever the
result is rational, so rational-only computations never pay for the wrapper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath

__all__ = [
    "Surd",
    "RadicalScalar",
    "Scalar",
    "as_scalar",
    "sqrt_rational",
    "scalar_sign",
    "scalar_is_rational",
    "scalar_inverse",
    "scalar_sqrt",
    "to_float",
    "parse_rational",
]


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, an integer, or a Fraction.  Floats are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"expected a rational string 'p/q', got {text!r}")
    s = text.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        num_i, den_i = int(num), int(den)
        if den_i == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num_i, den_i)
    return Fraction(int(s))


@lru_cache(maxsize=4096)
def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (k, m) with n = k**2 * m and m square-free."""
    if n <= 0:
        raise ValueError("expected a positive integer")
    k, m = 1, 1
    rem = n
    p = 2
    while p * p <= rem and p < 100_000:
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            k *= p ** (e // 2)
            if e % 2:
                m *= p
        p += 1 if p == 2 else 2
    if rem > 1:
        r = math.isqrt(rem)
        if r * r == rem:
            k *= r
        elif p * p <= rem:
            from sympy import factorint

            for prime, e in factorint(rem).items():
                k *= prime ** (e // 2)
                if e % 2:
                    m *= prime
        else:
            m *= rem
    return k, m


def _primes_of(m: int) -> frozenset[int]:
    out = set()
    x = m
    p = 2
    while p * p <= x:
        while x % p == 0:
            out.add(p)
            x //= p
        p += 1
    if x > 1:
        out.add(x)
    return frozenset(out)


def _norm(terms: dict[int, Fraction]):
    terms = {m: c for m, c in terms.items() if c != 0}
    if not terms:
        return Fraction(0)
    if len(terms) == 1 and 1 in terms:
        return terms[1]
    return Surd._raw(terms)


class Surd:
    """Sum of rational multiples of square roots of square-free integers."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: dict[int, Fraction] | None = None):
        clean: dict[int, Fraction] = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            k, sf = _squarefree_split(int(m))
            clean[sf] = clean.get(sf, Fraction(0)) + c * k
        self._terms = {m: c for m, c in clean.items() if c != 0}
        self._hash = None

    @classmethod
    def _raw(cls, terms):
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_rational(self) -> bool:
        return all(m == 1 for m in self._terms)

    # arithmetic ---------------------------------------------------------
    @staticmethod
    def _coerce(x) -> dict[int, Fraction] | None:
        if isinstance(x, Surd):
            return x._terms
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            return {1: Fraction(x)} if x != 0 else {}
        if isinstance(x, Rational):
            return {1: Fraction(x.numerator, x.denominator)}
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for m, c in o.items():
            out[m] = out.get(m, Fraction(0)) + c
        return _norm(out)

    __radd__ = __add__

    def __neg__(self):
        return Surd._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for m, c in o.items():
            out[m] = out.get(m, Fraction(0)) - c
        return _norm(out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict[int, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o.items():
                g = math.gcd(m1, m2)
                m = (m1 // g) * (m2 // g)
                out[m] = out.get(m, Fraction(0)) + c1 * c2 * g
        return _norm(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * scalar_inverse(_norm(dict(o)))

    def __rtruediv__(self, other):
        return scalar_inverse(self) * other

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = Fraction(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == {m: c for m, c in o.items() if c != 0}

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __float__(self):
        return float(sum(float(c) * math.sqrt(m) for m, c in self._terms.items()))

    def mp(self, dps: int = 50):
        with mpmath.workdps(dps):
            return mpmath.fsum(
                mpmath.mpf(c.numerator) / c.denominator * mpmath.sqrt(m)
                for m, c in self._terms.items()
            )

    def sign(self) -> int:
        if not self._terms:
            return 0
        for dps in (30, 80, 200):
            v = self.mp(dps)
            if abs(v) > mpmath.mpf(10) ** (-(dps - 10)):
                return 1 if v > 0 else -1
        raise ArithmeticError("could not resolve the sign of a nonzero surd")

    def __lt__(self, other):
        return scalar_sign(self - other) < 0

    def __gt__(self, other):
        return scalar_sign(self - other) > 0

    def __le__(self, other):
        return scalar_sign(self - other) <= 0

    def __ge__(self, other):
        return scalar_sign(self - other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        return f"Surd({self})"

    def __str__(self):
        parts = []
        for m in sorted(self._terms):
            c = self._terms[m]
            if m == 1:
                parts.append(str(c))
            elif c == 1:
                parts.append(f"sqrt({m})")
            elif c == -1:
                parts.append(f"-sqrt({m})")
            else:
                parts.append(f"{c}*sqrt({m})")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


Scalar = Fraction | Surd


def as_scalar(x) -> Scalar:
    if isinstance(x, Surd):
        return x
    if isinstance(x, RadicalScalar):
        return x.value
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot interpret {x!r} as an exact scalar")


def sqrt_rational(x) -> Scalar:
    """Exact nonnegative square root of a nonnegative rational."""
    x = Fraction(x)
    if x < 0:
        raise ValueError(f"square root of negative rational {x}")
    if x == 0:
        return Fraction(0)
    # sqrt(p/q) = sqrt(p*q)/q
    k, m = _squarefree_split(x.numerator * x.denominator)
    coeff = Fraction(k, x.denominator)
    return _norm({m: coeff})


def scalar_is_rational(x) -> bool:
    return not isinstance(x, Surd) or x.is_rational()


def scalar_sign(x) -> int:
    if isinstance(x, Surd):
        return x.sign()
    return (x > 0) - (x < 0)


def to_float(x) -> float:
    return float(x)


def scalar_sqrt(x) -> Scalar | None:
    """Square root inside the field, or None if it is not representable.

    Rationals always work.  A single-term surd c*sqrt(m) has a square root in
    the field only if it is rational, so anything else returns None.
    """
    if isinstance(x, Surd):
        if x.is_rational():
            x = x.terms.get(1, Fraction(0))
        else:
            return None
    if x < 0:
        return None
    return sqrt_rational(x)


def scalar_inverse(x) -> Scalar:
    if not isinstance(x, Surd):
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / Fraction(x)
    terms = x.terms
    if len(terms) == 1:
        (m, c), = terms.items()
        return _norm({m: 1 / (c * m)})
    # multiplication matrix on the basis of square-free products of the primes involved
    primes = sorted(set().union(*(_primes_of(m) for m in terms)))
    basis = [1]
    for p in primes:
        basis = basis + [b * p for b in basis]
    index = {b: i for i, b in enumerate(basis)}
    size = len(basis)
    mat = [[Fraction(0)] * size for _ in range(size)]
    for j, bj in enumerate(basis):
        for m, c in terms.items():
            g = math.gcd(m, bj)
            prod = (m // g) * (bj // g)
            mat[index[prod]][j] += c * g
    rhs = [Fraction(0)] * size
    rhs[0] = Fraction(1)
    sol = _solve_linear(mat, rhs)
    return _norm({b: sol[i] for i, b in enumerate(basis)})


def _solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(a)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


@dataclass(frozen=True)
class RadicalScalar:
    """``sign * sqrt(radicand)`` with a nonnegative rational radicand."""

    sign: int
    radicand: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radicand", Fraction(self.radicand))
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.radicand < 0:
            raise ValueError("radicand must be nonnegative")
        if (self.sign == 0) != (self.radicand == 0):
            raise ValueError("sign is 0 exactly when the radicand is 0")

    @classmethod
    def from_value(cls, x) -> "RadicalScalar":
        """Convert a Fraction or single-term Surd; multi-term surds raise."""
        if isinstance(x, Surd):
            terms = x.terms
            if len(terms) != 1:
                raise ValueError(f"{x} is not a single radical")
            (m, c), = terms.items()
            return cls(1 if c > 0 else -1, c * c * m)
        x = Fraction(x)
        if x == 0:
            return cls(0, Fraction(0))
        return cls(1 if x > 0 else -1, x * x)

    @property
    def value(self) -> Scalar:
        return self.sign * sqrt_rational(self.radicand)

    def is_rational(self) -> bool:
        return scalar_is_rational(self.value)

    def __mul__(self, other: "RadicalScalar") -> "RadicalScalar":
        if not isinstance(other, RadicalScalar):
            return NotImplemented
        return RadicalScalar(self.sign * other.sign, self.radicand * other.radicand)

    def __neg__(self):
        return RadicalScalar(-self.sign, self.radicand)

    def __float__(self):
        return self.sign * math.sqrt(self.radicand)

    def __str__(self):
        if self.sign == 0:
            return "0"
        v = self.value
        return str(v)
