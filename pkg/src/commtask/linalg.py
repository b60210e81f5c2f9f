"""Exact linear algebra helpers over the rationals."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Sequence

__all__ = ["exact_rank", "ceil_sqrt", "rank2_factorization"]


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q via fraction-free (Bareiss) elimination.

    Rows are scaled to integers first; the Bareiss update keeps all
    intermediate values integral, so there is no rounding anywhere.
    """
    m = []
    for row in rows:
        fracs = [Fraction(x) for x in row]
        den = 1
        for x in fracs:
            den = den * x.denominator // _gcd(den, x.denominator)
        m.append([int(x * den) for x in fracs])
    n_rows = len(m)
    n_cols = len(m[0]) if n_rows else 0
    rank = 0
    prev = 1
    for col in range(n_cols):
        piv = next((i for i in range(rank, n_rows) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for i in range(rank + 1, n_rows):
            f = m[i][col]
            mi, mr = m[i], m[rank]
            for j in range(col, n_cols):
                mi[j] = (mi[j] * p - f * mr[j]) // prev
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def ceil_sqrt(n: int) -> int:
    """Smallest integer k with k*k >= n."""
    r = isqrt(n)
    return r if r * r == n else r + 1


def rank2_factorization(
    rows: Sequence[Sequence[Fraction]],
) -> tuple[list[list[Fraction]], list[list[Fraction]]] | None:
    """Stochastic factorization C = L @ R with inner dimension 2, if rank(C) <= 2.

    All rows of a rank-<=2 row-stochastic matrix lie on a segment inside the
    probability simplex, so the two extreme rows generate every other row
    convexly.  Returns (L, R) with L n x 2 and R 2 x m row-stochastic, or None
    when rank exceeds 2.  Rank-1 input yields duplicated extreme rows.
    """
    if exact_rank(rows) > 2:
        return None
    pts = [list(map(Fraction, r)) for r in rows]
    base = pts[0]
    direction = None
    for p in pts[1:]:
        d = [a - b for a, b in zip(p, base)]
        if any(x != 0 for x in d):
            direction = d
            break
    if direction is None:  # all rows equal
        one, zero = Fraction(1), Fraction(0)
        left = [[one, zero] for _ in pts]
        return left, [base[:], base[:]]
    axis = next(j for j, x in enumerate(direction) if x != 0)
    coords = [(p[axis] - base[axis]) / direction[axis] for p in pts]
    lo = min(range(len(pts)), key=lambda i: coords[i])
    hi = max(range(len(pts)), key=lambda i: coords[i])
    span = coords[hi] - coords[lo]
    left = []
    for c in coords:
        w = (c - coords[lo]) / span
        left.append([1 - w, w])
    return left, [pts[lo][:], pts[hi][:]]
