"""Exact row-stochastic matrices and the named generator families.

Every matrix entry is an arbitrary-precision rational (``fractions.Fraction``),
so row sums, orthogonality and zero patterns are decided exactly.  All types
are immutable and hashable; every operation is a pure function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence, Union

__all__ = [
    "Rational",
    "Scalar",
    "CommMatrix",
    "StochasticPair",
    "FamilyParams",
    "MatrixError",
    "NotStochasticError",
    "ShapeMismatchError",
    "MatrixFormatError",
    "make_identity",
    "make_uniform",
    "make_D",
    "make_G",
    "make_A",
    "multiply",
    "d_compose",
    "parse",
    "serialize",
    "as_fraction",
]

Rational = Fraction
Scalar = Union[int, str, Fraction]


class MatrixError(ValueError):
    """Base class for matrix construction and format errors."""


class NotStochasticError(MatrixError):
    """A row violates nonnegativity or does not sum to exactly 1."""

    def __init__(self, row: int, deficit: Fraction, detail: str = ""):
        self.row = row
        self.deficit = deficit
        msg = f"row {row} is not stochastic (row sum deficit {deficit})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ShapeMismatchError(MatrixError):
    """Operands have incompatible shapes."""


class MatrixFormatError(MatrixError):
    """Malformed textual matrix input."""


def as_fraction(value: Scalar) -> Fraction:
    """Coerce an int, ``"p/q"`` string or Fraction to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise MatrixFormatError(f"cannot parse rational {value!r}") from exc
    raise MatrixFormatError(
        f"entry {value!r} has unsupported type {type(value).__name__}; "
        "floats are not accepted in the exact format"
    )


@dataclass(frozen=True)
class CommMatrix:
    """A communication matrix: nonnegative rational entries, rows summing to 1."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise MatrixError("matrix must have at least one row")
        width = len(self.rows[0])
        if width == 0:
            raise MatrixError("matrix must have at least one column")
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise MatrixError(f"row {i} has length {len(row)}, expected {width}")
            total = Fraction(0)
            for x in row:
                if x < 0:
                    raise NotStochasticError(i, 1 - sum(row), f"negative entry {x}")
                total += x
            if total != 1:
                raise NotStochasticError(i, 1 - total)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[Scalar]]) -> "CommMatrix":
        return cls(tuple(tuple(as_fraction(x) for x in row) for row in rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.rows[i]

    def col(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.rows)

    def __matmul__(self, other: "CommMatrix") -> "CommMatrix":
        return multiply(self, other)

    def to_lists(self) -> list[list[Fraction]]:
        return [list(row) for row in self.rows]

    def __str__(self) -> str:
        cells = [[str(x) for x in row] for row in self.rows]
        width = max(len(c) for row in cells for c in row)
        return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)


@dataclass(frozen=True)
class StochasticPair:
    """A witness pair (L, R) for the relation C = L @ D @ R."""

    left: CommMatrix
    right: CommMatrix

    def apply(self, middle: CommMatrix) -> CommMatrix:
        return multiply(self.left, multiply(middle, self.right))

    def verifies(self, target: CommMatrix, middle: CommMatrix) -> bool:
        """Exact check that left @ middle @ right equals target."""
        if self.left.n_cols != middle.n_rows or middle.n_cols != self.right.n_rows:
            return False
        return self.apply(middle) == target

    def to_json(self) -> dict:
        return {"L": _matrix_payload(self.left), "R": _matrix_payload(self.right)}


@dataclass(frozen=True)
class FamilyParams:
    """Parameters selecting one generator family member."""

    family: str  # Identity | Uniform | D | G | A
    n: int
    eps: Fraction | None = None  # D family only
    t: int | None = None  # G family only

    def __post_init__(self) -> None:
        if self.family not in {"Identity", "Uniform", "D", "G", "A"}:
            raise MatrixError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise MatrixError("n must be positive")
        if self.family == "D":
            if self.eps is None or not 0 <= self.eps <= 1:
                raise MatrixError("D family needs eps in [0, 1]")
        if self.family == "G":
            if self.t is None or not 1 <= self.t <= self.n - 1:
                raise MatrixError("G family needs t with 1 <= t <= n-1")

    def build(self) -> CommMatrix:
        if self.family == "Identity":
            return make_identity(self.n)
        if self.family == "Uniform":
            return make_uniform(self.n)
        if self.family == "D":
            assert self.eps is not None
            return make_D(self.n, self.eps)
        if self.family == "G":
            assert self.t is not None
            return make_G(self.n, self.t)
        return make_A(self.n)


def make_identity(n: int) -> CommMatrix:
    """The n-state perfect distinguishability matrix (the n x n identity)."""
    if n < 1:
        raise MatrixError("n must be >= 1")
    one, zero = Fraction(1), Fraction(0)
    return CommMatrix(tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))


def make_uniform(n: int) -> CommMatrix:
    """The useless all-1/n matrix (every outcome equally likely for every input)."""
    if n < 1:
        raise MatrixError("n must be >= 1")
    v = Fraction(1, n)
    return CommMatrix(tuple(tuple(v for _ in range(n)) for _ in range(n)))


def make_D(n: int, eps: Scalar) -> CommMatrix:
    """Noisy uniform (anti)distinguishability matrix: 1-eps on the diagonal,
    eps/(n-1) elsewhere.
    """
    if n < 2:
        raise MatrixError("n must be >= 2")
    e = as_fraction(eps)
    if not 0 <= e <= 1:
        raise MatrixError(f"eps must lie in [0, 1], got {e}")
    diag = 1 - e
    off = e / (n - 1)
    return CommMatrix(
        tuple(tuple(diag if i == j else off for j in range(n)) for i in range(n))
    )


def make_G(n: int, t: int) -> CommMatrix:
    """Partial-ignorance matrix: all rows uniform on an (n-t)-subset of columns,
    listed in decreasing lexicographic order of their 0/1 support pattern.
    """
    if n < 2:
        raise MatrixError("n must be >= 2")
    if not 1 <= t <= n - 1:
        raise MatrixError(f"t must satisfy 1 <= t <= n-1, got {t}")
    value = Fraction(1, n - t)
    patterns = []
    for support in combinations(range(n), n - t):
        pattern = tuple(1 if j in support else 0 for j in range(n))
        patterns.append(pattern)
    patterns.sort(reverse=True)
    return CommMatrix(
        tuple(tuple(value * p for p in pattern) for pattern in patterns)
    )


def make_A(n: int) -> CommMatrix:
    """Uniform antidistinguishability matrix A_n = G(n, 1): one excluded column
    per row, uniform on the rest.
    """
    return make_G(n, 1)


def multiply(a: CommMatrix, b: CommMatrix) -> CommMatrix:
    """Exact matrix product of two row-stochastic matrices."""
    if a.n_cols != b.n_rows:
        raise ShapeMismatchError(
            f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ"
        )
    bt = [b.col(j) for j in range(b.n_cols)]
    out = []
    for row in a.rows:
        out.append(tuple(sum(x * y for x, y in zip(row, col)) for col in bt))
    return CommMatrix(tuple(out))


def d_compose(n: int, eps: Scalar, mu: Scalar) -> Fraction:
    """Noise parameter of the product of two same-size D-family matrices."""
    if n < 2:
        raise MatrixError("n must be >= 2")
    e, m = as_fraction(eps), as_fraction(mu)
    for name, v in (("eps", e), ("mu", m)):
        if not 0 <= v <= 1:
            raise MatrixError(f"{name} must lie in [0, 1], got {v}")
    return e + m - Fraction(n, n - 1) * e * m


def _entry_payload(x: Fraction):
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _matrix_payload(c: CommMatrix) -> list[list]:
    return [[_entry_payload(x) for x in row] for row in c.rows]


def serialize(c: CommMatrix, name: str | None = None) -> str:
    """Serialize to the exact JSON format (entries as ints or "p/q" strings)."""
    payload = _matrix_payload(c)
    if name is not None:
        return json.dumps({"name": name, "matrix": payload})
    return json.dumps(payload)


def parse(text: str) -> CommMatrix:
    """Parse the exact JSON matrix format; rejects floats and non-stochastic rows.

    Accepts either a bare array of arrays or ``{"name": ..., "matrix": [...]}``.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON: {exc}") from exc
    if isinstance(data, dict):
        if "matrix" not in data:
            raise MatrixFormatError('object form requires a "matrix" key')
        data = data["matrix"]
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise MatrixFormatError("expected a non-empty array of arrays")
    rows = []
    for i, raw_row in enumerate(data):
        row = []
        for x in raw_row:
            if isinstance(x, float):
                raise MatrixFormatError(
                    f"row {i}: float entry {x!r} not accepted; use \"p/q\" strings"
                )
            row.append(as_fraction(x))
        rows.append(tuple(row))
    return CommMatrix(tuple(rows))
