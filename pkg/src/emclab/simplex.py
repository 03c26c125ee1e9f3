"""Exact rational simplex for packing LPs.

Solves  max c·x  s.t.  A x <= b, x >= 0  with b >= 0, so the all-slack basis
is feasible and no phase one is needed. Pivoting follows Bland's rule
(lowest-index entering column, lowest-index leaving basic variable on ratio
ties), which cannot cycle. The optimal dual is read off the slack columns of
the final objective row.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError, ScaleLimitError

MAX_PIVOTS = 100_000


@dataclass
class LPSolution:
    value: Fraction
    x: list[Fraction]
    y: list[Fraction]  # dual multipliers, one per row
    pivots: int

    def primal_feasible(self, A, b) -> bool:
        if any(v < 0 for v in self.x):
            return False
        return all(sum(a * v for a, v in zip(row, self.x)) <= bi for row, bi in zip(A, b))

    def dual_feasible(self, A, c) -> bool:
        if any(v < 0 for v in self.y):
            return False
        cols = len(c)
        return all(sum(A[i][j] * self.y[i] for i in range(len(A))) >= c[j] for j in range(cols))


def solve_packing(A: Sequence[Sequence[int | Fraction]], b: Sequence[int | Fraction],
                  c: Sequence[int | Fraction], max_pivots: int = MAX_PIVOTS) -> LPSolution:
    rows, cols = len(A), len(c)
    if any(len(r) != cols for r in A) or len(b) != rows:
        raise PreconditionError("inconsistent LP dimensions")
    if any(v < 0 for v in b):
        raise PreconditionError("right-hand side must be non-negative")
    width = cols + rows
    T = [[Fraction(v) for v in A[i]] + [Fraction(int(i == j)) for j in range(rows)] + [Fraction(b[i])]
         for i in range(rows)]
    # reduced costs: z_j - c_j, optimal when all >= 0
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * rows + [Fraction(0)]
    basis = list(range(cols, width))
    pivots = 0
    while True:
        enter = next((j for j in range(width) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(rows):
            a = T[i][enter]
            if a > 0:
                r = T[i][-1] / a
                if best is None or r < best or (r == best and basis[i] < basis[leave]):
                    leave, best = i, r
        if leave is None:
            raise PreconditionError("LP is unbounded")
        pivots += 1
        if pivots > max_pivots:
            raise ScaleLimitError(f"simplex exceeded {max_pivots} pivots")
        prow = T[leave]
        p = prow[enter]
        if p != 1:
            prow = [v / p for v in prow]
            T[leave] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for i in range(rows):
            if i != leave:
                f = T[i][enter]
                if f:
                    row = T[i]
                    for j in nz:
                        row[j] -= f * prow[j]
        f = obj[enter]
        for j in nz:
            obj[j] -= f * prow[j]
        basis[leave] = enter
    x = [Fraction(0)] * cols
    for i, bv in enumerate(basis):
        if bv < cols:
            x[bv] = T[i][-1]
    y = [obj[cols + i] for i in range(rows)]
    return LPSolution(obj[-1], x, y, pivots)
