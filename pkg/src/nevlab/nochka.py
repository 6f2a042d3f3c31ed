"""Nochka weights for hyperplanes in N-subgeneral position.

Weights are found by exact rational linear programming: the defining
conditions are linear in (gamma_1, ..., gamma_q, gamma) once the index that
attains the maximum is fixed.  Any feasible point is accepted; among them we
prefer the smallest Nochka constant and then the largest minimal weight.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .curves import HyperplaneFamily, PositionViolated, check_position
from .lp import linprog_exact


class Infeasible(RuntimeError):
    """No weights found; means a bug or a violated precondition."""


class NoSelection(RuntimeError):
    pass


@dataclass(frozen=True)
class NochkaWeights:
    gamma_j: tuple[Fraction, ...]
    gamma: Fraction

    def as_strings(self) -> list[str]:
        return [f"{g.numerator}/{g.denominator}" for g in self.gamma_j]


def gamma_bounds(n: int, N: int) -> tuple[Fraction, Fraction]:
    return Fraction(n + 1, 2 * N - n + 1), Fraction(n, N)


def smt_coefficient(F: HyperplaneFamily) -> int:
    """q - 2N + n - 1."""
    return F.q - 2 * F.N + F.n - 1


def small_subsets(F: HyperplaneFamily):
    """All Q with 0 < |Q| <= N+1 (0-based index tuples)."""
    for k in range(1, min(F.N + 1, F.q) + 1):
        yield from itertools.combinations(range(F.q), k)


def verify_weights(F: HyperplaneFamily, W: NochkaWeights) -> list[str]:
    """Exhaustive exact check of the Nochka conditions; returns violations."""
    bad = []
    g = W.gamma_j
    if len(g) != F.q:
        return [f"expected {F.q} weights, got {len(g)}"]
    for j, v in enumerate(g):
        if not (0 < v <= 1):
            bad.append(f"gamma_{j + 1} = {v} not in (0, 1]")
    if W.gamma != max(g):
        bad.append(f"gamma = {W.gamma} is not max gamma_j = {max(g)}")
    lo, hi = gamma_bounds(F.n, F.N)
    if not (lo <= W.gamma <= hi):
        bad.append(f"gamma = {W.gamma} outside [{lo}, {hi}]")
    if W.gamma * smt_coefficient(F) != sum(g) - F.n - 1:
        bad.append("identity gamma*(q-2N+n-1) = sum gamma_j - n - 1 fails")
    for Q in small_subsets(F):
        s = sum(g[j] for j in Q)
        if s > F.rank(Q):
            bad.append(f"sum over {tuple(j + 1 for j in Q)} = {s} > rank {F.rank(Q)}")
    return bad


def _uniform_candidates(F: HyperplaneFamily) -> list[NochkaWeights]:
    lo, _ = gamma_bounds(F.n, F.N)
    c = smt_coefficient(F)
    cands = [lo]
    # uniform weights force gamma*(q - c) = n + 1
    if F.q != c:
        forced = Fraction(F.n + 1, F.q - c)
        if forced not in cands:
            cands.append(forced)
    return [NochkaWeights(tuple([g] * F.q), g) for g in cands if 0 < g <= 1]


def _solve_lp(F: HyperplaneFamily, jstar: int | None):
    """Lexicographic LP (min gamma, then max min gamma_j) with constraint
    generation over the subset inequalities.  Returns (weights, t) or None."""
    q, n = F.q, F.n
    lo, hi = gamma_bounds(n, F.N)
    c = smt_coefficient(F)
    nv = q + 2  # gamma_1..gamma_q, gamma, t
    G, T = q, q + 1

    def unit(idx_coeffs):
        row = [0] * nv
        for i, v in idx_coeffs:
            row[i] += v
        return row

    A_ub, b_ub = [], []
    for j in range(q):
        A_ub.append(unit([(j, 1)])); b_ub.append(1)
        A_ub.append(unit([(T, 1), (j, -1)])); b_ub.append(0)
        A_ub.append(unit([(j, 1), (G, -1)])); b_ub.append(0)
    A_ub.append(unit([(G, -1)])); b_ub.append(-lo)
    A_ub.append(unit([(G, 1)])); b_ub.append(hi)
    A_eq = [unit([(j, 1) for j in range(q)] + [(G, -c)])]
    b_eq = [n + 1]
    if jstar is not None:
        A_eq.append(unit([(jstar, 1), (G, -1)])); b_eq.append(0)

    subsets = [Q for Q in small_subsets(F) if len(Q) >= 2 and F.rank(Q) < len(Q)]
    active: set = set()

    def solve(cost, extra_eq=(), extra_b=()):
        while True:
            ub = A_ub + [unit([(j, 1) for j in Q]) for Q in sorted(active)]
            bb = b_ub + [F.rank(Q) for Q in sorted(active)]
            res = linprog_exact(cost, ub, bb, A_eq + list(extra_eq), b_eq + list(extra_b))
            if res.status != "optimal":
                return None
            x = res.x
            viol = [Q for Q in subsets if Q not in active and sum(x[j] for j in Q) > F.rank(Q)]
            if not viol:
                return x
            viol.sort(key=lambda Q: F.rank(Q) - sum(x[j] for j in Q))
            active.update(viol[:8])

    x1 = solve(unit([(G, 1)]))
    if x1 is None:
        return None
    gmin = x1[G]
    x2 = solve(unit([(T, -1)]), [unit([(G, 1)])], [gmin])
    if x2 is None:
        return None
    return NochkaWeights(tuple(x2[:q]), x2[G]), x2[T]


def compute_weights(F: HyperplaneFamily) -> NochkaWeights:
    if not check_position(F):
        raise PositionViolated(f"hyperplanes are not in {F.N}-subgeneral position")
    if F.q <= 2 * F.N - F.n + 1:
        raise ValueError(f"need q > 2N - n + 1 = {2 * F.N - F.n + 1}, got q = {F.q}")
    for cand in _uniform_candidates(F):
        if not verify_weights(F, cand):
            return cand
    best = None
    sol = _solve_lp(F, None)
    if sol is not None and max(sol[0].gamma_j) == sol[0].gamma and sol[1] > 0:
        best = sol
    else:
        for j in range(F.q):
            sol = _solve_lp(F, j)
            if sol is None or sol[1] <= 0:
                continue
            if best is None or (sol[0].gamma, -sol[1]) < (best[0].gamma, -best[1]):
                best = sol
    if best is None:
        raise Infeasible("no Nochka weights found")
    W = best[0]
    problems = verify_weights(F, W)
    if problems:
        raise Infeasible("solver output failed verification: " + "; ".join(problems[:3]))
    return W


# -- subset selection ------------------------------------------------------------

def _product_le(betas, gammas, Q, picks) -> bool:
    if all(isinstance(betas[j], (int, Fraction)) for j in Q):
        D = math.lcm(*(gammas[j].denominator for j in Q))
        lhs = Fraction(1)
        for j in Q:
            lhs *= Fraction(betas[j]) ** int(gammas[j] * D)
        rhs = Fraction(1)
        for j in picks:
            rhs *= Fraction(betas[j])
        return lhs <= rhs ** D
    lhs = sum(float(gammas[j]) * math.log(betas[j]) for j in Q)
    rhs = sum(math.log(betas[j]) for j in picks)
    return rhs - lhs >= -1e-12


def select_subset(F: HyperplaneFamily, W: NochkaWeights, Q: Sequence[int],
                  betas: Sequence) -> list[int]:
    """Distinct j_1..j_rank(Q) in Q spanning rank(Q) with
    prod_{j in Q} beta_j^gamma_j <= prod_i beta_{j_i}.

    Greedy on decreasing beta (ties by index), which maximizes the product
    over all rank-preserving subsets.
    """
    Q = list(Q)
    if not 0 < len(Q) <= F.N + 1:
        raise ValueError("need 0 < |Q| <= N + 1")
    if any(b < 1 for b in betas):
        raise ValueError("all beta_j must be >= 1")
    target = F.rank(Q)
    picks: list[int] = []
    for j in sorted(Q, key=lambda j: (-betas[j], j)):
        if F.rank(picks + [j]) > len(picks):
            picks.append(j)
        if len(picks) == target:
            break
    if F.rank(picks) != target or not _product_le(betas, W.gamma_j, Q, picks):
        raise NoSelection(f"no valid selection for Q = {Q}")
    return picks
