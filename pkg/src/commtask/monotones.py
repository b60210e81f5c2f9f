"""Order monotones of communication matrices.

All values are computed exactly: rank over Q, column max/min sums, the
distinguishability number iota (maximum set of pairwise-orthogonal rows,
with a constructive witness), and nonnegative rank (exact via the known
small-case shortcuts, otherwise bracketed by the certified decision engine).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .linalg import ceil_sqrt, exact_rank
from .matrix import CommMatrix, StochasticPair, make_identity, multiply

__all__ = [
    "IntBounds",
    "MonotoneReport",
    "InvariantViolation",
    "rank",
    "lambda_max",
    "lambda_min",
    "iota",
    "iota_witness",
    "iota_witness_for_rows",
    "orthogonal_row_graph",
    "nneg_rank",
    "nneg_rank_shortcut",
    "nneg_rank_cheap_bounds",
    "report",
]


class InvariantViolation(RuntimeError):
    """A computed certificate or report contradicts a proven inequality."""


@dataclass(frozen=True)
class IntBounds:
    """Integer bracket [lo, hi]; exact when the ends coincide."""

    lo: int
    hi: int
    reason: str = ""

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InvariantViolation(f"empty bracket [{self.lo}, {self.hi}]")

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


def rank(c: CommMatrix) -> int:
    """Exact rank over the rationals."""
    return exact_rank(c.rows)


def lambda_max(c: CommMatrix) -> Fraction:
    """Sum over columns of the column maximum."""
    return sum(max(c.col(j)) for j in range(c.n_cols))


def lambda_min(c: CommMatrix) -> Fraction:
    """Negated sum over columns of the column minimum (always in [-1, 0])."""
    return -sum(min(c.col(j)) for j in range(c.n_cols))


def orthogonal_row_graph(c: CommMatrix) -> list[int]:
    """Adjacency bitmasks: rows i, j adjacent iff their dot product is exactly 0."""
    n = c.n_rows
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if sum(x * y for x, y in zip(c.rows[i], c.rows[j])) == 0:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def _max_clique(adj: list[int], n: int) -> list[int]:
    """Deterministic branch-and-bound maximum clique (pivot pruning)."""
    best: list[int] = []
    if n == 0:
        return best

    def expand(current: list[int], cand: int) -> None:
        nonlocal best
        if cand == 0:
            if len(current) > len(best):
                best = current[:]
            return
        if len(current) + cand.bit_count() <= len(best):
            return
        # pivot = candidate covering the most candidates; ties -> lowest index
        pivot, cover = -1, -1
        p = cand
        while p:
            v = (p & -p).bit_length() - 1
            c = (cand & adj[v]).bit_count()
            if c > cover:
                pivot, cover = v, c
            p &= p - 1
        ext = cand & ~adj[pivot]
        while ext:
            v = (ext & -ext).bit_length() - 1
            bit = 1 << v
            current.append(v)
            expand(current, cand & adj[v])
            current.pop()
            cand &= ~bit
            ext &= ~bit
            if len(current) + cand.bit_count() <= len(best):
                return

    expand([], (1 << n) - 1)
    return sorted(best)


def iota(c: CommMatrix) -> int:
    """Size of the largest set of pairwise-orthogonal rows."""
    return len(_max_clique(orthogonal_row_graph(c), c.n_rows))


def iota_witness_for_rows(c: CommMatrix, row_indices: Sequence[int]) -> StochasticPair:
    """Witness pair (L, R) with L @ c @ R equal to the k x k identity, built
    from the given pairwise-orthogonal rows.

    L selects the rows; R routes each column to the unique selected row whose
    support contains it, and spreads columns outside every support uniformly.
    """
    rows = list(row_indices)
    k = len(rows)
    n, m = c.shape
    if len(set(rows)) != k or not all(0 <= p < n for p in rows):
        raise ValueError("row indices must be distinct and in range")
    for a in range(k):
        for b in range(a + 1, k):
            dot = sum(x * y for x, y in zip(c.rows[rows[a]], c.rows[rows[b]]))
            if dot != 0:
                raise ValueError(f"rows {rows[a]} and {rows[b]} are not orthogonal")
    supports = [set(q for q in range(m) if c.rows[p][q] != 0) for p in rows]
    covered = set().union(*supports) if supports else set()
    zero, one = Fraction(0), Fraction(1)
    left = []
    for p in rows:
        row = [zero] * n
        row[p] = one
        left.append(tuple(row))
    right = []
    spread = Fraction(1, k)
    for q in range(m):
        row = [zero] * k
        if q in covered:
            j = next(idx for idx, s in enumerate(supports) if q in s)
            row[j] = one
        else:
            row = [spread] * k
        right.append(tuple(row))
    pair = StochasticPair(CommMatrix(tuple(left)), CommMatrix(tuple(right)))
    if multiply(pair.left, multiply(c, pair.right)) != make_identity(k):
        raise InvariantViolation("orthogonal-row witness failed exact verification")
    return pair


def iota_witness(c: CommMatrix) -> StochasticPair:
    """Witness (L, R) with L @ c @ R = identity of size iota(c)."""
    rows = _max_clique(orthogonal_row_graph(c), c.n_rows)
    return iota_witness_for_rows(c, rows)


def _ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def nneg_rank_shortcut(c: CommMatrix) -> int | None:
    """Exact nonnegative rank when one of the closed-form cases applies.

    Cases: rank <= 2; at most 3 rows or columns; full-rank square side.
    """
    n, m = c.shape
    r = rank(c)
    if r <= 2 or min(n, m) <= 3 or r == min(n, m):
        return r
    return None


def nneg_rank_cheap_bounds(c: CommMatrix) -> IntBounds:
    """Bracket on the nonnegative rank without invoking the decision engine."""
    exact = nneg_rank_shortcut(c)
    if exact is not None:
        return IntBounds(exact, exact, "shortcut")
    lo = max(rank(c), _ceil_fraction(lambda_max(c)))
    return IntBounds(lo, min(c.shape), "rank and decoding lower bounds")


def nneg_rank(c: CommMatrix, budget_ms: int = 60_000) -> int | IntBounds:
    """Nonnegative rank: exact when a shortcut or the decider settles every
    level, otherwise an explicit bracket with the reason recorded.
    """
    exact = nneg_rank_shortcut(c)
    if exact is not None:
        return exact
    from .majorize import decide  # local import: decide() consults monotones

    cheap = nneg_rank_cheap_bounds(c)
    lo, hi = cheap.lo, min(c.shape)
    unknown_reason = ""
    certified_lo = lo
    k = lo
    while k < hi:
        verdict = decide(c, make_identity(k), budget_ms=budget_ms)
        if verdict.outcome == "Majorizes":
            hi = k
            break
        if verdict.outcome == "NotMajorizes":
            certified_lo = k + 1
            k += 1
            continue
        unknown_reason = f"decider budget exhausted at k={k}"
        break
    lo = max(lo, certified_lo)
    if lo == hi:
        return lo
    return IntBounds(lo, hi, unknown_reason or "search stopped early")


@dataclass(frozen=True)
class MonotoneReport:
    """All monotone values and brackets for a single matrix."""

    rank: int
    nneg_rank: int | IntBounds
    psd: "object"  # PsdBounds; typed loosely to avoid a circular import
    lambda_max: Fraction
    lambda_min: Fraction
    iota: int

    def __post_init__(self) -> None:
        nneg_lo = self.nneg_rank if isinstance(self.nneg_rank, int) else self.nneg_rank.lo
        checks = [
            (self.iota <= self.lambda_max, "iota <= lambda_max"),
            (self.lambda_max <= self.psd.upper, "lambda_max <= psd upper"),
            (ceil_sqrt(self.rank) <= self.psd.upper, "ceil(sqrt(rank)) <= psd upper"),
            (self.rank <= nneg_lo, "rank <= nneg_rank"),
            (Fraction(-1) <= self.lambda_min <= 0, "lambda_min in [-1, 0]"),
        ]
        for ok, label in checks:
            if not ok:
                raise InvariantViolation(f"monotone report violates {label}")

    def nneg_bounds(self) -> IntBounds:
        if isinstance(self.nneg_rank, int):
            return IntBounds(self.nneg_rank, self.nneg_rank)
        return self.nneg_rank

    def to_json(self) -> dict:
        nneg = self.nneg_bounds()
        return {
            "rank": self.rank,
            "nneg_rank": nneg.to_json(),
            "psd": self.psd.to_json(),
            "lambda_max": str(self.lambda_max),
            "lambda_min": str(self.lambda_min),
            "iota": self.iota,
        }


def report(c: CommMatrix, budget_ms: int = 60_000) -> MonotoneReport:
    """Aggregate every monotone; quantum-dimension bounds come from the
    implementability module.
    """
    from .quantum import quantum_dim_bounds  # local import to avoid a cycle

    nneg = nneg_rank(c, budget_ms=budget_ms // 2)
    psd = quantum_dim_bounds(c, budget_ms=budget_ms // 2, nneg=nneg)
    return MonotoneReport(
        rank=rank(c),
        nneg_rank=nneg,
        psd=psd,
        lambda_max=lambda_max(c),
        lambda_min=lambda_min(c),
        iota=iota(c),
    )
