"""Exact two-phase simplex over the rationals (Bland's rule).

Small dense problems only: minimize c.x subject to A_ub x <= b_ub,
A_eq x = b_eq, x >= 0, all data given as ``Fraction`` (or int).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

F0 = Fraction(0)
F1 = Fraction(1)


@dataclass
class LPResult:
    status: str          # "optimal", "infeasible" or "unbounded"
    x: list[Fraction] | None
    objective: Fraction | None


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            self.rows[r] = row = [v * inv for v in row]
            self.rhs[r] = self.rhs[r] * inv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                self.rows[i] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[i] = self.rhs[i] - f * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: list[Fraction]) -> tuple[list[Fraction], Fraction]:
        red = list(cost)
        obj = F0
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[r]
                for j, v in enumerate(row):
                    if v:
                        red[j] -= cb * v
                obj += cb * self.rhs[r]
        return red, obj

    def optimize(self, cost: list[Fraction], allowed: int) -> str:
        """Minimize cost over columns < allowed; Bland's rule."""
        while True:
            red, _ = self.reduced_costs(cost)
            enter = next((j for j in range(allowed) if red[j] < 0), None)
            if enter is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], enter)


def linprog_exact(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
                  A_eq: Sequence[Sequence] = (), b_eq: Sequence = ()) -> LPResult:
    c = [Fraction(v) for v in c]
    nvar = len(c)
    A_ub = [[Fraction(v) for v in row] for row in A_ub]
    A_eq = [[Fraction(v) for v in row] for row in A_eq]
    b_ub = [Fraction(v) for v in b_ub]
    b_eq = [Fraction(v) for v in b_eq]
    m_ub, m_eq = len(A_ub), len(A_eq)
    m = m_ub + m_eq
    # columns: x (nvar) | slacks (m_ub) | artificials (as needed)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    need_art: list[int] = []
    for i, (row, b) in enumerate(zip(A_ub, b_ub)):
        slack = [F0] * m_ub
        slack[i] = F1
        full = row + slack
        if b < 0:
            full = [-v for v in full]
            b = -b
            need_art.append(i)
        rows.append(full)
        rhs.append(b)
    for row, b in zip(A_eq, b_eq):
        full = row + [F0] * m_ub
        if b < 0:
            full = [-v for v in full]
            b = -b
        need_art.append(len(rows))
        rows.append(full)
        rhs.append(b)
    n_art = len(need_art)
    basis = [0] * m
    for i in range(m):
        rows[i] = rows[i] + [F0] * n_art
    for k, i in enumerate(need_art):
        rows[i][nvar + m_ub + k] = F1
        basis[i] = nvar + m_ub + k
    for i in range(m_ub):
        if i not in need_art:
            basis[i] = nvar + i
    tab = _Tableau(rows, rhs, basis)
    ncol = nvar + m_ub + n_art
    if n_art:
        cost1 = [F0] * (nvar + m_ub) + [F1] * n_art
        tab.optimize(cost1, ncol)
        _, obj1 = tab.reduced_costs(cost1)
        if obj1 > 0:
            return LPResult("infeasible", None, None)
        # drive zero-level artificials out of the basis
        for r in range(m):
            if tab.basis[r] >= nvar + m_ub:
                col = next((j for j in range(nvar + m_ub) if tab.rows[r][j] != 0), None)
                if col is not None:
                    tab.pivot(r, col)
        keep = [r for r in range(m) if tab.basis[r] < nvar + m_ub]
        tab = _Tableau([tab.rows[r][:nvar + m_ub] for r in keep],
                       [tab.rhs[r] for r in keep], [tab.basis[r] for r in keep])
    cost2 = c + [F0] * m_ub
    status = tab.optimize(cost2, nvar + m_ub)
    if status == "unbounded":
        return LPResult("unbounded", None, None)
    x = [F0] * (nvar + m_ub)
    for r, b in enumerate(tab.basis):
        x[b] = tab.rhs[r]
    _, obj = tab.reduced_costs(cost2)
    return LPResult("optimal", x[:nvar], obj)
