"""Exact rational linear programming via two-phase primal simplex.

Bland's smallest-index rule is used for both entering and leaving variables,
which guarantees termination without any perturbation.  All arithmetic is in
``fractions.Fraction``; intended for the small LPs that certificates rest on
(convex-hull membership, witness polishing, bound re-derivation).

Problem form: minimize ``c @ x`` subject to ``A_eq @ x == b_eq``,
``A_ub @ x <= b_ub`` and ``x >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = ["LPSolution", "solve_lp", "hull_membership", "hull_projection_linf"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list[Fraction] | None = None
    objective: Fraction | None = None


def _pivot(tab: list[list[Fraction]], basis: list[int], pr: int, pc: int) -> None:
    piv = tab[pr][pc]
    row = tab[pr]
    inv = _ONE / piv
    tab[pr] = [v * inv for v in row]
    row = tab[pr]
    for i, other in enumerate(tab):
        if i == pr:
            continue
        f = other[pc]
        if f != 0:
            tab[i] = [a - f * b for a, b in zip(other, row)]
    basis[pr] = pc


def _bland_iterate(tab: list[list[Fraction]], basis: list[int], ncols: int) -> str:
    # Objective row is last; rhs is the last column.
    while True:
        obj = tab[-1]
        pc = -1
        for j in range(ncols):
            if obj[j] < 0:
                pc = j
                break
        if pc < 0:
            return "optimal"
        pr, best = -1, None
        for i in range(len(tab) - 1):
            a = tab[i][pc]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[pr]):
                    pr, best = i, ratio
        if pr < 0:
            return "unbounded"
        _pivot(tab, basis, pr, pc)


def solve_lp(
    c: Sequence[Fraction],
    a_eq: Sequence[Sequence[Fraction]] = (),
    b_eq: Sequence[Fraction] = (),
    a_ub: Sequence[Sequence[Fraction]] = (),
    b_ub: Sequence[Fraction] = (),
) -> LPSolution:
    """Exact two-phase simplex for min c@x, A_eq x = b_eq, A_ub x <= b_ub, x >= 0."""
    n = len(c)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    n_slack = len(a_ub)
    for r, (arow, b) in enumerate(zip(a_ub, b_ub)):
        row = [Fraction(v) for v in arow] + [_ZERO] * n_slack
        row[n + r] = _ONE
        rows.append(row)
        rhs.append(Fraction(b))
    for arow, b in zip(a_eq, b_eq):
        rows.append([Fraction(v) for v in arow] + [_ZERO] * n_slack)
        rhs.append(Fraction(b))
    m = len(rows)
    total = n + n_slack

    # Normalize rhs >= 0, then add artificials where the slack cannot start basic.
    basis = [-1] * m
    art_cols: list[int] = []
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
        slack_j = n + i if i < n_slack else -1
        if slack_j >= 0 and rows[i][slack_j] == 1:
            basis[i] = slack_j
        else:
            art_cols.append(i)
    n_art = len(art_cols)
    width = total + n_art + 1
    tab: list[list[Fraction]] = []
    for i in range(m):
        row = rows[i] + [_ZERO] * n_art + [rhs[i]]
        tab.append(row)
    for k, i in enumerate(art_cols):
        tab[i][total + k] = _ONE
        basis[i] = total + k

    if n_art:
        # Phase 1: minimize the sum of artificials.
        obj = [_ZERO] * width
        for k in range(n_art):
            obj[total + k] = _ONE
        tab.append(obj)
        for i in range(m):
            if basis[i] >= total:
                tab[-1] = [a - b for a, b in zip(tab[-1], tab[i])]
        status = _bland_iterate(tab, basis, total + n_art)
        if status != "optimal" or -tab[-1][-1] != 0:
            return LPSolution("infeasible")
        tab.pop()
        # Drive remaining artificials out of the basis where possible.
        for i in range(m):
            if basis[i] >= total:
                pc = next((j for j in range(total) if tab[i][j] != 0), None)
                if pc is not None:
                    _pivot(tab, basis, i, pc)
        # Freeze any still-basic artificial at zero by zeroing its column use.
        for row in tab:
            del row[total:-1]
        width = total + 1

    # Phase 2.
    obj = [Fraction(v) for v in c] + [_ZERO] * (n_slack + 1)
    tab.append(obj)
    for i in range(m):
        if basis[i] < total and tab[-1][basis[i]] != 0:
            f = tab[-1][basis[i]]
            tab[-1] = [a - f * b for a, b in zip(tab[-1], tab[i])]
    status = _bland_iterate(tab, basis, total)
    if status == "unbounded":
        return LPSolution("unbounded")
    x = [_ZERO] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][-1]
    val = sum(ci * xi for ci, xi in zip(c, x))
    return LPSolution("optimal", x, val)


def hull_membership(
    point: Sequence[Fraction], generators: Sequence[Sequence[Fraction]]
) -> list[Fraction] | None:
    """Exact convex combination of ``generators`` equal to ``point``, or None.

    Returns the coefficient vector lambda with lambda >= 0, sum lambda = 1 and
    sum_k lambda_k generators[k] == point when one exists.
    """
    if not generators:
        return None
    dim = len(point)
    k = len(generators)
    a_eq = [[Fraction(g[d]) for g in generators] for d in range(dim)]
    a_eq.append([_ONE] * k)
    b_eq = [Fraction(v) for v in point] + [_ONE]
    sol = solve_lp([_ZERO] * k, a_eq=a_eq, b_eq=b_eq)
    if sol.status != "optimal":
        return None
    return sol.x


def hull_projection_linf(
    point: Sequence[Fraction], generators: Sequence[Sequence[Fraction]]
) -> tuple[Fraction, list[Fraction]]:
    """Best max-norm approximation of ``point`` by a convex combination.

    Minimizes ``max_j |point_j - (lambda @ generators)_j|`` over the simplex;
    returns the exact optimum value and one optimal coefficient vector.
    """
    dim = len(point)
    k = len(generators)
    # Variables: lambda_0..lambda_{k-1}, t.
    c = [_ZERO] * k + [_ONE]
    a_ub: list[list[Fraction]] = []
    b_ub: list[Fraction] = []
    for d in range(dim):
        col = [Fraction(g[d]) for g in generators]
        a_ub.append(col + [-_ONE])
        b_ub.append(Fraction(point[d]))
        a_ub.append([-v for v in col] + [-_ONE])
        b_ub.append(-Fraction(point[d]))
    a_eq = [[_ONE] * k + [_ZERO]]
    b_eq = [_ONE]
    sol = solve_lp(c, a_eq=a_eq, b_eq=b_eq, a_ub=a_ub, b_ub=b_ub)
    if sol.status != "optimal":  # simplex is nonempty and objective bounded below
        raise RuntimeError(f"hull projection LP unexpectedly {sol.status}")
    assert sol.x is not None
    return sol.x[k], sol.x[:k]
