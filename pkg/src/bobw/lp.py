"""A small exact simplex over Fractions, for LPs of the form max c.x s.t. Ax = b, x >= 0.

Pivoting follows Bland's rule (smallest entering index, smallest leaving basis
variable on ratio ties), so degenerate problems cannot cycle.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

ZERO = Fraction(0)


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    x: tuple[Fraction, ...]
    basis: tuple[int, ...]
    pivots: int


class _Tableau:
    """Rows hold ``[coefficients..., rhs]`` in canonical form w.r.t. ``basis``."""

    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        p = row[col]
        if p != 1:
            row[:] = [v / p for v in row]
        nz = [(k, v) for k, v in enumerate(row) if v]
        for k, other in enumerate(self.rows):
            if k == r:
                continue
            f = other[col]
            if f:
                for c, v in nz:
                    other[c] -= f * v
        self.basis[r] = col
        self.pivots += 1

    def reduced_costs(self, cost: Sequence[Fraction], ncols: int) -> list[Fraction]:
        red = list(cost[:ncols]) + [ZERO] * (ncols - len(cost))
        for r, b in enumerate(self.basis):
            cb = cost[b] if b < len(cost) else ZERO
            if cb:
                row = self.rows[r]
                for c in range(ncols):
                    if row[c]:
                        red[c] -= cb * row[c]
        return red

    def optimise(self, cost: Sequence[Fraction], allowed: int) -> None:
        """Maximise ``cost`` using columns ``< allowed`` as entering candidates."""
        while True:
            red = self.reduced_costs(cost, allowed)
            entering = next((c for c in range(allowed) if red[c] > 0), None)
            if entering is None:
                return
            best: Optional[tuple[Fraction, int, int]] = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (row[-1] / a, self.basis[r], r)
                    if best is None or key[:2] < best[:2]:
                        best = key
            if best is None:
                raise Unbounded("objective is unbounded")
            self.pivot(best[2], entering)


def maximize(c: Sequence[Fraction], a_eq: Sequence[Sequence[Fraction]],
             b_eq: Sequence[Fraction], basis: Optional[Sequence[int]] = None) -> LPSolution:
    """Solve ``max c.x`` subject to ``a_eq x = b_eq`` and ``x >= 0`` exactly.

    ``basis`` may name a feasible starting basis (one column per row); otherwise a
    phase-one problem with artificial variables finds one.
    """
    nvars = len(c)
    rows = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(a_eq, b_eq)]
    if basis is not None:
        tab = _Tableau(rows, list(basis))
        for r, col in enumerate(list(basis)):
            if tab.rows[r][col] == 0:
                raise ValueError("starting basis is singular")
            tab.pivot(r, col)
        tab.pivots = 0
        if any(row[-1] < 0 for row in tab.rows):
            raise ValueError("starting basis is infeasible")
    else:
        for row in rows:
            if row[-1] < 0:
                row[:] = [-v for v in row]
        m = len(rows)
        for r, row in enumerate(rows):
            row[-1:-1] = [Fraction(int(k == r)) for k in range(m)]
        tab = _Tableau(rows, [nvars + r for r in range(m)])
        phase_one = [ZERO] * nvars + [Fraction(-1)] * m
        tab.optimise(phase_one, nvars + m)
        if any(tab.rows[r][-1] != 0 for r, b in enumerate(tab.basis) if b >= nvars):
            raise Infeasible("no feasible point")
        # drive zero-valued artificials out of the basis where possible
        for r in range(m):
            if tab.basis[r] >= nvars:
                col = next((k for k in range(nvars) if tab.rows[r][k] != 0), None)
                if col is not None:
                    tab.pivot(r, col)
        keep = [r for r in range(m) if tab.basis[r] < nvars]
        tab.rows = [tab.rows[r][:nvars] + [tab.rows[r][-1]] for r in keep]
        tab.basis = [tab.basis[r] for r in keep]
    tab.optimise(list(c), nvars)
    x = [ZERO] * nvars
    for r, b in enumerate(tab.basis):
        x[b] = tab.rows[r][-1]
    value = sum((ci * xi for ci, xi in zip(c, x) if xi), ZERO)
    return LPSolution(value, tuple(x), tuple(tab.basis), tab.pivots)
