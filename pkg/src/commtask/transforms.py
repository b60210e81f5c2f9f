"""Equivalence-preserving transforms with exact two-way witnesses.

Each transform returns ``(result, forward, backward)`` where ``forward`` is a
stochastic pair with ``forward.apply(source) == result`` and ``backward``
satisfies ``backward.apply(result) == source``, both checked exactly.  The
``reduce`` normal form iterates the inverse transforms: drop zero columns,
merge proportional columns, delete rows inside the convex hull of the rest.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .matrix import (
    CommMatrix,
    MatrixError,
    StochasticPair,
    as_fraction,
    make_identity,
    multiply,
)
from .simplex import hull_membership

__all__ = [
    "transform_permute",
    "transform_duplicate_row",
    "transform_add_zero_column",
    "transform_add_convex_row",
    "transform_split_column",
    "reduce",
]

TransformResult = tuple[CommMatrix, StochasticPair, StochasticPair]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _selector(indices: Sequence[int], width: int) -> CommMatrix:
    """Row-stochastic matrix whose row i is the basis vector e_{indices[i]}."""
    rows = []
    for k in indices:
        row = [_ZERO] * width
        row[k] = _ONE
        rows.append(tuple(row))
    return CommMatrix(tuple(rows))


def _check(result: CommMatrix, source: CommMatrix, fwd: StochasticPair, bwd: StochasticPair) -> None:
    if not fwd.verifies(result, source) or not bwd.verifies(source, result):
        raise AssertionError("internal error: transform witness failed exact verification")


def transform_permute(
    c: CommMatrix, row_perm: Sequence[int], col_perm: Sequence[int]
) -> TransformResult:
    """Relabel rows and columns: result[i][j] = c[row_perm[i]][col_perm[j]]."""
    n, m = c.shape
    if sorted(row_perm) != list(range(n)) or sorted(col_perm) != list(range(m)):
        raise MatrixError("row_perm/col_perm must be permutations of the index ranges")
    left = _selector(row_perm, n)
    # right[k][j] = 1 iff k = col_perm[j]
    inv_col = [0] * m
    for j, k in enumerate(col_perm):
        inv_col[k] = j
    right = _selector(inv_col, m)
    result = multiply(left, multiply(c, right))
    inv_row = [0] * n
    for i, k in enumerate(row_perm):
        inv_row[k] = i
    bwd = StochasticPair(_selector(inv_row, n), _selector(list(col_perm), m))
    fwd = StochasticPair(left, right)
    _check(result, c, fwd, bwd)
    return result, fwd, bwd


def transform_duplicate_row(c: CommMatrix, i: int) -> TransformResult:
    """Append a copy of row i."""
    n, m = c.shape
    if not 0 <= i < n:
        raise MatrixError(f"row index {i} out of range")
    result = CommMatrix(c.rows + (c.rows[i],))
    fwd = StochasticPair(_selector(list(range(n)) + [i], n), make_identity(m))
    bwd = StochasticPair(_selector(list(range(n)), n + 1), make_identity(m))
    _check(result, c, fwd, bwd)
    return result, fwd, bwd


def transform_add_zero_column(c: CommMatrix) -> TransformResult:
    """Append an all-zero outcome column."""
    n, m = c.shape
    result = CommMatrix(tuple(row + (_ZERO,) for row in c.rows))
    # forward right: old column j -> new column j; nothing maps to the new last column
    fwd = StochasticPair(make_identity(n), _selector(list(range(m)), m + 1))
    # backward right: new column j -> old j; the zero column may map anywhere
    bwd = StochasticPair(make_identity(n), _selector(list(range(m)) + [0], m))
    _check(result, c, fwd, bwd)
    return result, fwd, bwd


def transform_add_convex_row(c: CommMatrix, weights: Sequence[Fraction]) -> TransformResult:
    """Append a row that is the given convex mixture of the existing rows."""
    n, m = c.shape
    w = [as_fraction(x) for x in weights]
    if len(w) != n or any(x < 0 for x in w) or sum(w) != 1:
        raise MatrixError("weights must be nonnegative over all rows and sum to 1")
    new_row = tuple(
        sum(w[i] * c.rows[i][j] for i in range(n)) for j in range(m)
    )
    result = CommMatrix(c.rows + (new_row,))
    left_fwd = CommMatrix(make_identity(n).rows + (tuple(w),))
    fwd = StochasticPair(left_fwd, make_identity(m))
    bwd = StochasticPair(_selector(list(range(n)), n + 1), make_identity(m))
    _check(result, c, fwd, bwd)
    return result, fwd, bwd


def transform_split_column(
    c: CommMatrix, j: int, weights: Sequence[Fraction]
) -> TransformResult:
    """Split column j into len(weights) columns scaled by the given weights."""
    n, m = c.shape
    if not 0 <= j < m:
        raise MatrixError(f"column index {j} out of range")
    w = [as_fraction(x) for x in weights]
    if not w or any(x < 0 for x in w) or sum(w) != 1:
        raise MatrixError("split weights must be nonnegative and sum to 1")
    k = len(w)
    rows = []
    for row in c.rows:
        rows.append(
            tuple(row[:j]) + tuple(row[j] * wi for wi in w) + tuple(row[j + 1 :])
        )
    result = CommMatrix(tuple(rows))
    # forward right (m x (m+k-1)): column j spreads with the weights
    fr = []
    for o in range(m):
        row = [_ZERO] * (m + k - 1)
        if o < j:
            row[o] = _ONE
        elif o == j:
            for l, wi in enumerate(w):
                row[j + l] = wi
        else:
            row[o + k - 1] = _ONE
        fr.append(tuple(row))
    fwd = StochasticPair(make_identity(n), CommMatrix(tuple(fr)))
    # backward right ((m+k-1) x m): the split columns merge back into j
    targets = list(range(j)) + [j] * k + list(range(j + 1, m))
    bwd = StochasticPair(make_identity(n), _selector(targets, m))
    _check(result, c, fwd, bwd)
    return result, fwd, bwd


def _compose(
    acc: tuple[CommMatrix, StochasticPair, StochasticPair],
    original: CommMatrix,
    step: TransformResult,
) -> tuple[CommMatrix, StochasticPair, StochasticPair]:
    _, fwd_acc, bwd_acc = acc
    new, fwd, bwd = step
    fwd_total = StochasticPair(
        multiply(fwd.left, fwd_acc.left), multiply(fwd_acc.right, fwd.right)
    )
    bwd_total = StochasticPair(
        multiply(bwd_acc.left, bwd.left), multiply(bwd.right, bwd_acc.right)
    )
    _check(new, original, fwd_total, bwd_total)
    return new, fwd_total, bwd_total


def _drop_zero_column(c: CommMatrix) -> TransformResult | None:
    n, m = c.shape
    if m == 1:
        return None
    for j in range(m):
        if all(row[j] == 0 for row in c.rows):
            keep = [o for o in range(m) if o != j]
            result = CommMatrix(tuple(tuple(row[o] for o in keep) for row in c.rows))
            fwd = StochasticPair(
                make_identity(n),
                _selector([o if o < j else (o - 1 if o > j else 0) for o in range(m)], m - 1),
            )
            bwd = StochasticPair(make_identity(n), _selector(keep, m))
            _check(result, c, fwd, bwd)
            return result, fwd, bwd
    return None


def _merge_proportional_columns(c: CommMatrix) -> TransformResult | None:
    n, m = c.shape
    for j in range(m):
        col_j = c.col(j)
        if all(x == 0 for x in col_j):
            continue
        pivot = next(i for i, x in enumerate(col_j) if x != 0)
        for k in range(j + 1, m):
            col_k = c.col(k)
            if col_j[pivot] == 0:
                continue
            alpha = col_k[pivot] / col_j[pivot]
            if any(col_k[i] != alpha * col_j[i] for i in range(n)):
                continue
            # column k = alpha * column j: merge k into j
            keep = [o for o in range(m) if o != k]
            rows = []
            for row in c.rows:
                merged = list(row[o] for o in keep)
                merged[keep.index(j)] = row[j] + row[k]
                rows.append(tuple(merged))
            result = CommMatrix(tuple(rows))
            fwd_targets = []
            for o in range(m):
                if o == k:
                    fwd_targets.append(keep.index(j))
                else:
                    fwd_targets.append(keep.index(o))
            fwd = StochasticPair(make_identity(n), _selector(fwd_targets, m - 1))
            # backward: split the merged column back with weights 1/(1+alpha), alpha/(1+alpha)
            share_j = _ONE / (1 + alpha)
            br = []
            for o in keep:
                row = [_ZERO] * m
                if o == j:
                    row[j] = share_j
                    row[k] = 1 - share_j
                else:
                    row[o] = _ONE
                br.append(tuple(row))
            bwd = StochasticPair(make_identity(n), CommMatrix(tuple(br)))
            _check(result, c, fwd, bwd)
            return result, fwd, bwd
    return None


def _drop_hull_row(c: CommMatrix) -> TransformResult | None:
    n, m = c.shape
    if n == 1:
        return None
    for i in range(n):
        others = [c.rows[k] for k in range(n) if k != i]
        lam = hull_membership(c.rows[i], others)
        if lam is None:
            continue
        keep = [k for k in range(n) if k != i]
        result = CommMatrix(tuple(c.rows[k] for k in keep))
        fwd = StochasticPair(_selector(keep, n), make_identity(m))
        back_rows = []
        for k in range(n):
            if k == i:
                back_rows.append(tuple(lam))
            else:
                row = [_ZERO] * (n - 1)
                row[keep.index(k)] = _ONE
                back_rows.append(tuple(row))
        bwd = StochasticPair(CommMatrix(tuple(back_rows)), make_identity(m))
        _check(result, c, fwd, bwd)
        return result, fwd, bwd
    return None


def reduce(c: CommMatrix) -> TransformResult:
    """Normal-form heuristic: smallest equivalent matrix this pass finds.

    Repeatedly drops zero columns, merges proportional column pairs and removes
    rows lying in the convex hull of the remaining rows, composing exact
    equivalence witnesses along the way.  Idempotent, but no minimality or
    canonicity claim is attached to the output.
    """
    n, m = c.shape
    acc: tuple[CommMatrix, StochasticPair, StochasticPair] = (
        c,
        StochasticPair(make_identity(n), make_identity(m)),
        StochasticPair(make_identity(n), make_identity(m)),
    )
    changed = True
    while changed:
        changed = False
        for simplify in (_drop_zero_column, _merge_proportional_columns, _drop_hull_row):
            step = simplify(acc[0])
            if step is not None:
                acc = _compose(acc, c, step)
                changed = True
                break
    return acc
