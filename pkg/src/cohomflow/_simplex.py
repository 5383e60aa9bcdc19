"""Two-phase tableau simplex over exact rationals with Bland's rule.

Solves ``max c.x  s.t.  A x = b, x >= 0`` for small dense problems.  Bland's
rule makes cycling impossible, so no tolerance or iteration cap is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
OPTIMAL = "optimal"


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: list[Fraction] | None = None


def _pivot(tab: list[list[Fraction]], row: int, col: int) -> None:
    pr = tab[row]
    pv = pr[col]
    if pv != 1:
        tab[row] = pr = [v / pv for v in pr]
    for i, r in enumerate(tab):
        if i != row:
            f = r[col]
            if f != 0:
                tab[i] = [a - f * b for a, b in zip(r, pr)]


def _run(tab, basis, ncols) -> bool:
    """Iterate on a tableau whose last row is the reduced objective (to minimise).

    Returns False if unbounded.
    """
    m = len(tab) - 1
    while True:
        obj = tab[-1]
        col = next((j for j in range(ncols) if obj[j] < 0), None)
        if col is None:
            return True
        best = None
        for i in range(m):
            a = tab[i][col]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        row = best[1]
        _pivot(tab, row, col)
        basis[row] = col


def solve_lp(A, b, c) -> LPResult:
    """Maximise ``c.x`` subject to ``A x = b`` and ``x >= 0`` exactly."""
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m = len(A)
    nvar = len(c)
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]

    # phase one: artificials nvar..nvar+m-1
    ncols = nvar + m
    tab = []
    for i in range(m):
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        tab.append(A[i] + art + [b[i]])
    obj = [Fraction(0)] * (ncols + 1)
    for i in range(m):
        for j in range(nvar):
            obj[j] -= tab[i][j]
        obj[-1] -= tab[i][-1]
    tab.append(obj)
    basis = [nvar + i for i in range(m)]
    _run(tab, basis, ncols)
    if tab[-1][-1] != 0:
        return LPResult(INFEASIBLE)

    # drive remaining artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(basis):
        if basis[i] >= nvar:
            col = next((j for j in range(nvar) if tab[i][j] != 0), None)
            if col is None:
                del tab[i]
                del basis[i]
                continue
            _pivot(tab, i, col)
            basis[i] = col
        i += 1

    # phase two on the original columns
    tab = [row[:nvar] + [row[-1]] for row in tab[:-1]]
    obj = [-v for v in c] + [Fraction(0)]
    for i, j in enumerate(basis):
        f = obj[j]
        if f != 0:
            obj = [a - f * bb for a, bb in zip(obj, tab[i])]
    tab.append(obj)
    if not _run(tab, basis, nvar):
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * nvar
    for i, j in enumerate(basis):
        x[j] = tab[i][-1]
    return LPResult(OPTIMAL, tab[-1][-1], x)


def feasible(A, b) -> bool:
    return solve_lp(A, b, [0] * (len(A[0]) if A else 0)).status != INFEASIBLE
