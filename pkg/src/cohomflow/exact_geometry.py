"""Exact rational geometry: the bilinear form J, its null cone, and convex position.

Vectors are tuples of :class:`fractions.Fraction`.  Extended vectors have
``r+1`` entries, the last one being the soliton-potential slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ._simplex import OPTIMAL, feasible, solve_lp

Rat = Fraction
QVec = tuple

__all__ = [
    "Rat",
    "QVec",
    "qvec",
    "JForm",
    "HullQuery",
    "j_eval",
    "j_shifted",
    "is_null",
    "hull_vertices",
    "in_hull",
    "is_edge",
    "unique_sum",
    "rank",
    "affine_dim",
]


def qvec(entries) -> tuple[Fraction, ...]:
    return tuple(Fraction(e) for e in entries)


@dataclass(frozen=True)
class JForm:
    """The kinetic bilinear form on extended momenta ``(p_1..p_r, phi)``."""

    dims: tuple[int, ...]
    n: int = field(init=False)
    matrix: tuple[tuple[Fraction, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d <= 0 for d in dims):
            raise ValueError("dims must be a nonempty list of positive integers")
        object.__setattr__(self, "dims", dims)
        n = sum(dims)
        object.__setattr__(self, "n", n)
        r = len(dims)
        m = [[Fraction(0)] * (r + 1) for _ in range(r + 1)]
        for i, d in enumerate(dims):
            m[i][i] = Fraction(-1, d)
            m[i][r] = m[r][i] = Fraction(-1, 2)
        m[r][r] = Fraction(-(n - 1), 4)
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in m))

    @property
    def r(self) -> int:
        return len(self.dims)

    @property
    def d_ext(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(d) for d in self.dims) + (Fraction(-2),)

    def apply(self, v: Sequence) -> tuple:
        """Matrix times vector; entries may be any ring elements."""
        return tuple(sum((mij * vj for mij, vj in zip(row, v) if mij != 0), 0 * v[0]) for row in self.matrix)


def _check_len(form: JForm, *vecs):
    for v in vecs:
        if len(v) != form.r + 1:
            raise ValueError(f"expected a vector of length {form.r + 1}, got {len(v)}")


def _lift(x):
    return Fraction(x) if isinstance(x, int) else x


def j_eval(form: JForm, a: Sequence, b: Sequence):
    """Exact polarised value J(a, b)."""
    _check_len(form, a, b)
    r = form.r
    a = [_lift(x) for x in a]
    b = [_lift(x) for x in b]
    total = Fraction(0)
    for i, d in enumerate(form.dims):
        total += a[i] * b[i] / d
    sa = sum(a[:r])
    sb = sum(b[:r])
    total += Fraction(1, 2) * (a[r] * sb + b[r] * sa)
    total += Fraction(form.n - 1, 4) * a[r] * b[r]
    return -total


def j_shifted(form: JForm, v: Sequence, w: Sequence) -> Fraction:
    """``1 - sum v_i w_i / d_i``, equal to J(v+d, w+d) for weight-type vectors."""
    _check_len(form, v, w)
    if v[-1] != 0 or w[-1] != 0:
        raise ValueError("extended slot must be zero")
    return 1 - sum(Fraction(v[i]) * Fraction(w[i]) / d for i, d in enumerate(form.dims))


def is_null(form: JForm, c: Sequence) -> bool:
    """Whether c lies on the null cone of J, via the slanted-cone equation."""
    _check_len(form, c)
    c = qvec(c)
    cr = c[-1]
    if cr == 0:
        return all(x == 0 for x in c)
    lhs = sum((2 * c[i] + d * cr) ** 2 / d for i, d in enumerate(form.dims))
    return lhs == cr * cr


@dataclass(frozen=True)
class HullQuery:
    points: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        pts = tuple(qvec(p) for p in self.points)
        if not pts:
            raise ValueError("a hull query needs at least one point")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("all points must have the same length")
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate points")
        object.__setattr__(self, "points", pts)


def _as_query(q) -> HullQuery:
    return q if isinstance(q, HullQuery) else HullQuery(tuple(q))


def in_hull(x: Sequence, points: Sequence[Sequence]) -> bool:
    """Whether x is a convex combination of ``points`` (exact LP feasibility)."""
    x = qvec(x)
    pts = [qvec(p) for p in points]
    if not pts:
        return False
    dim = len(x)
    A = [[p[i] for p in pts] for i in range(dim)] + [[Fraction(1)] * len(pts)]
    b = list(x) + [Fraction(1)]
    return feasible(A, b)


def hull_vertices(q) -> list[tuple[Fraction, ...]]:
    """Points of the query that are not convex combinations of the others."""
    pts = _as_query(q).points
    out = []
    for i, p in enumerate(pts):
        others = pts[:i] + pts[i + 1:]
        if not others or not in_hull(p, others):
            out.append(p)
    return out


def is_edge(q, a: Sequence, b: Sequence) -> bool:
    """Whether the segment [a, b] is an edge of conv(points) containing no other point.

    The midpoint of a and b is written as a convex combination of the points
    while maximising the weight placed on points other than a and b.  The
    minimal face through the midpoint is spanned by every point that can carry
    positive weight, so that maximum is zero exactly when {a, b} is the full
    point set of a face.
    """
    query = _as_query(q)
    a, b = qvec(a), qvec(b)
    verts = set(hull_vertices(query))
    if a not in verts or b not in verts:
        raise ValueError("a and b must both be hull vertices")
    if a == b:
        raise ValueError("a and b must be distinct")
    pts = query.points
    mid = tuple((x + y) / 2 for x, y in zip(a, b))
    dim = len(mid)
    A = [[p[i] for p in pts] for i in range(dim)] + [[Fraction(1)] * len(pts)]
    rhs = list(mid) + [Fraction(1)]
    cost = [Fraction(0) if p in (a, b) else Fraction(1) for p in pts]
    res = solve_lp(A, rhs, cost)
    assert res.status == OPTIMAL
    return res.value == 0


def unique_sum(points: Sequence[Sequence], a: Sequence, c: Sequence) -> bool:
    """Whether a + c has no other decomposition x + y with x, y in points."""
    pts = [qvec(p) for p in points]
    a, c = qvec(a), qvec(c)
    if a not in pts or c not in pts:
        raise ValueError("a and c must belong to the point set")
    target = tuple(x + y for x, y in zip(a, c))
    pair = {a, c}
    for i, x in enumerate(pts):
        for y in pts[i:]:
            if {x, y} != pair and all(s + t == g for s, t, g in zip(x, y, target)):
                return False
    return True


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix."""
    m = [list(qvec(r)) for r in rows]
    if not m:
        return 0
    ncol = len(m[0])
    rk = 0
    for col in range(ncol):
        piv = next((i for i in range(rk, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for i in range(rk + 1, len(m)):
            if m[i][col] != 0:
                f = m[i][col] / m[rk][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rk])]
        rk += 1
    return rk


def affine_dim(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull; -1 for the empty set."""
    pts = [qvec(p) for p in points]
    if not pts:
        return -1
    base = pts[0]
    return rank([tuple(x - y for x, y in zip(p, base)) for p in pts[1:]])
