"""Classical and quantum implementability of communication matrices.

A quantum model is a finite set of density matrices plus a POVM; its
evaluation ``tr(state_a @ effect_b)`` is a communication matrix.  Models with
rational complex entries are validated and evaluated exactly; models with
irrational entries (stored as floats) are checked to 1e-12.  Quantum-dimension
brackets combine proven lower-bound rules with upper bounds from the witness
library, submatrix scaling, nonnegative rank, and a non-certified numeric
factorization heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .linalg import ceil_sqrt
from .matrix import CommMatrix, ShapeMismatchError, make_A, make_D, make_G
from .monotones import (
    IntBounds,
    InvariantViolation,
    lambda_max,
    nneg_rank,
    nneg_rank_cheap_bounds,
    rank,
)

__all__ = [
    "ModelError",
    "QuantumModel",
    "PsdBounds",
    "QubitRefutation",
    "LibraryWitness",
    "eval_model",
    "verify_model",
    "psd_lower",
    "psd_upper",
    "qubit_screen",
    "scaled_submatrix_bound",
    "classical_dim",
    "quantum_dim_bounds",
    "witness_library",
    "psd_factorization",
    "model_from_factorization",
]

ExactEntry = tuple[Fraction, Fraction]  # (real, imaginary)
FLOAT_TOL = 1e-12


class ModelError(ValueError):
    """A state or effect violates a model invariant; names the offender."""


def _exact_entry(value) -> ExactEntry | None:
    """Interpret ints/Fractions/(re, im) pairs as exact complex entries."""
    if isinstance(value, (int, Fraction)):
        return (Fraction(value), Fraction(0))
    if isinstance(value, tuple) and len(value) == 2:
        re, im = value
        if isinstance(re, (int, Fraction)) and isinstance(im, (int, Fraction)):
            return (Fraction(re), Fraction(im))
    return None


def _to_complex(matrix) -> np.ndarray:
    out = np.zeros((len(matrix), len(matrix[0])), dtype=complex)
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            e = _exact_entry(v)
            out[i, j] = complex(float(e[0]), float(e[1])) if e else complex(v)
    return out


def _exact_matrix(matrix) -> list[list[ExactEntry]] | None:
    rows = []
    for row in matrix:
        r = []
        for v in row:
            e = _exact_entry(v)
            if e is None:
                return None
            r.append(e)
        rows.append(r)
    return rows


def _cmul(a: ExactEntry, b: ExactEntry) -> ExactEntry:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _trace_product(a: list[list[ExactEntry]], b: list[list[ExactEntry]]) -> ExactEntry:
    d = len(a)
    re, im = Fraction(0), Fraction(0)
    for i in range(d):
        for k in range(d):
            p = _cmul(a[i][k], b[k][i])
            re += p[0]
            im += p[1]
    return (re, im)


def _exact_psd_check(m: list[list[ExactEntry]]) -> bool:
    """Hermitian PSD test over exact complex rationals: every principal minor >= 0."""
    d = len(m)
    for i in range(d):
        for j in range(d):
            if m[i][j][0] != m[j][i][0] or m[i][j][1] != -m[j][i][1]:
                return False
    for size in range(1, d + 1):
        for idx in combinations(range(d), size):
            if _cdet([[m[i][j] for j in idx] for i in idx])[0] < 0:
                return False
    return True


def _cdet(m: list[list[ExactEntry]]) -> ExactEntry:
    d = len(m)
    m = [row[:] for row in m]
    det: ExactEntry = (Fraction(1), Fraction(0))
    for col in range(d):
        piv = next(
            (i for i in range(col, d) if m[i][col] != (Fraction(0), Fraction(0))), None
        )
        if piv is None:
            return (Fraction(0), Fraction(0))
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = (-det[0], -det[1])
        p = m[col][col]
        det = _cmul(det, p)
        norm = p[0] * p[0] + p[1] * p[1]
        pinv = (p[0] / norm, -p[1] / norm)
        for i in range(col + 1, d):
            f = _cmul(m[i][col], pinv)
            for j in range(col, d):
                prod = _cmul(f, m[col][j])
                m[i][j] = (m[i][j][0] - prod[0], m[i][j][1] - prod[1])
    return det


@dataclass(frozen=True)
class QuantumModel:
    """States and a POVM on a d-dimensional quantum system.

    ``states``/``effects`` hold d x d matrices; entries are exact complex
    rationals (int, Fraction or (re, im) Fraction pairs) or floats/complex.
    A model is *exact* when every entry of every operator is exact.
    """

    dim: int
    states: tuple
    effects: tuple
    name: str = ""
    tol: float = FLOAT_TOL

    def __post_init__(self) -> None:
        for kind, ops in (("state", self.states), ("effect", self.effects)):
            for idx, op in enumerate(ops):
                if len(op) != self.dim or any(len(r) != self.dim for r in op):
                    raise ModelError(f"{kind} {idx} is not {self.dim}x{self.dim}")
        exact = self.exact
        for idx, op in enumerate(self.states):
            self._check_state(idx, op, exact)
        self._check_effects(exact)

    @property
    def exact(self) -> bool:
        return all(
            _exact_matrix(op) is not None for op in tuple(self.states) + tuple(self.effects)
        )

    def _check_state(self, idx: int, op, exact: bool) -> None:
        if exact:
            em = _exact_matrix(op)
            tr = sum((em[i][i][0] for i in range(self.dim)), Fraction(0))
            if tr != 1:
                raise ModelError(f"state {idx} violates trace-1: deficit {1 - tr}")
            if not _exact_psd_check(em):
                raise ModelError(f"state {idx} is not Hermitian positive semidefinite")
        else:
            m = _to_complex(op)
            dev = abs(np.trace(m) - 1.0)
            if dev > self.tol:
                raise ModelError(f"state {idx} violates trace-1: deficit {dev:.3e}")
            if np.max(np.abs(m - m.conj().T)) > self.tol:
                raise ModelError(f"state {idx} is not Hermitian")
            lo = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
            if lo < -self.tol:
                raise ModelError(f"state {idx} is not PSD: min eigenvalue {lo:.3e}")

    def _check_effects(self, exact: bool) -> None:
        if exact:
            total = [[(Fraction(0), Fraction(0))] * self.dim for _ in range(self.dim)]
            for idx, op in enumerate(self.effects):
                em = _exact_matrix(op)
                if not _exact_psd_check(em):
                    raise ModelError(f"effect {idx} is not Hermitian positive semidefinite")
                for i in range(self.dim):
                    for j in range(self.dim):
                        total[i][j] = (
                            total[i][j][0] + em[i][j][0],
                            total[i][j][1] + em[i][j][1],
                        )
            for i in range(self.dim):
                for j in range(self.dim):
                    want = (Fraction(1 if i == j else 0), Fraction(0))
                    if total[i][j] != want:
                        raise ModelError(
                            f"effects do not sum to identity at ({i},{j}): "
                            f"got {total[i][j]}"
                        )
        else:
            total = np.zeros((self.dim, self.dim), dtype=complex)
            for idx, op in enumerate(self.effects):
                m = _to_complex(op)
                if np.max(np.abs(m - m.conj().T)) > self.tol:
                    raise ModelError(f"effect {idx} is not Hermitian")
                lo = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
                if lo < -self.tol:
                    raise ModelError(f"effect {idx} is not PSD: min eigenvalue {lo:.3e}")
                total += m
            dev = float(np.max(np.abs(total - np.eye(self.dim))))
            if dev > self.tol:
                raise ModelError(f"effects do not sum to identity: deviation {dev:.3e}")

    def states_complex(self) -> np.ndarray:
        return np.array([_to_complex(op) for op in self.states])

    def effects_complex(self) -> np.ndarray:
        return np.array([_to_complex(op) for op in self.effects])

    def to_json(self) -> dict:
        def entry(v) -> dict:
            e = _exact_entry(v)
            if e is not None:
                num = lambda f: int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
                return {"re": num(e[0]), "im": num(e[1])}
            z = complex(v)
            return {"re": z.real, "im": z.imag}

        def op_payload(op):
            return [[entry(v) for v in row] for row in op]

        return {
            "dim": self.dim,
            "states": [op_payload(op) for op in self.states],
            "effects": [op_payload(op) for op in self.effects],
        }


def eval_model(model: QuantumModel):
    """Evaluate tr(state_a @ effect_b): a CommMatrix for exact models,
    a float array for models with irrational entries.
    """
    if model.exact:
        rows = []
        for a, st in enumerate(model.states):
            es = _exact_matrix(st)
            row = []
            for b, ef in enumerate(model.effects):
                re, im = _trace_product(es, _exact_matrix(ef))
                if im != 0:
                    raise ModelError(
                        f"trace of state {a} with effect {b} is not real: im={im}"
                    )
                row.append(re)
            rows.append(tuple(row))
        return CommMatrix(tuple(rows))
    states = model.states_complex()
    effects = model.effects_complex()
    return np.einsum("aij,bji->ab", states, effects).real


def verify_model(model: QuantumModel, target: CommMatrix, tol: float = FLOAT_TOL):
    """Compare the model evaluation against a target matrix.

    Exact models must match entry-for-entry; float models within ``tol``.
    Returns (ok, max_deviation).
    """
    if (len(model.states), len(model.effects)) != target.shape:
        raise ShapeMismatchError(
            f"model yields {len(model.states)}x{len(model.effects)}, "
            f"target is {target.shape[0]}x{target.shape[1]}"
        )
    got = eval_model(model)
    if isinstance(got, CommMatrix):
        dev = max(
            abs(got.rows[i][j] - target.rows[i][j])
            for i in range(target.n_rows)
            for j in range(target.n_cols)
        )
        return dev == 0, float(dev)
    tf = np.array([[float(x) for x in row] for row in target.rows])
    dev = float(np.max(np.abs(got - tf)))
    return dev <= tol, dev


@dataclass(frozen=True)
class PsdBounds:
    """Two-sided bracket on the quantum implementation dimension."""

    lower: int
    upper: int
    lambda_max_bound: Fraction
    methods: tuple[str, ...] = ()
    numeric_witness: tuple[QuantumModel | None, float] | None = None

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise InvariantViolation(
                f"psd bracket empty: [{self.lower}, {self.upper}]"
            )

    def to_json(self) -> dict:
        payload = {
            "lo": self.lower,
            "hi": self.upper,
            "lambda_max": str(self.lambda_max_bound),
            "methods": list(self.methods),
        }
        if self.numeric_witness is not None:
            payload["numeric_witness_residual"] = self.numeric_witness[1]
            payload["numeric_witness_certified"] = False
        return payload


def _ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def psd_lower(c: CommMatrix) -> tuple[int, list[str]]:
    """Certified lower bound on the quantum dimension, with fired rule tags.

    Rules: sqrt of the rank; the decoding bound (lambda_max); a forced third
    dimension when some column has two zeros yet a nonzero entry while all
    rows differ; and the constant-2/3-diagonal uniqueness rule for 3x3
    matrices that are not the symmetric-noise matrix itself.
    """
    fired: dict[str, int] = {"sqrt_rank": ceil_sqrt(rank(c))}
    fired["lambda_max"] = _ceil_fraction(lambda_max(c))
    n, m = c.shape
    rows_distinct = len(set(c.rows)) == n
    if rows_distinct:
        for j in range(m):
            col = c.col(j)
            zeros = sum(1 for x in col if x == 0)
            if zeros >= 2 and zeros < n:
                fired["kernel"] = 3
                break
    if n == m == 3 and all(c.rows[i][i] == Fraction(2, 3) for i in range(3)):
        if c != make_D(3, Fraction(1, 3)):
            fired["diag_2_3_uniqueness"] = 3
    best = max(fired.values())
    tags = sorted(tag for tag, v in fired.items() if v == best)
    return best, tags


@dataclass(frozen=True)
class LibraryWitness:
    name: str
    model: QuantumModel
    target: CommMatrix

    def verify(self) -> tuple[bool, float]:
        return verify_model(self.model, self.target)


def _bloch_state(v: Sequence[float]) -> list[list[complex]]:
    x, y, z = v
    return [
        [complex(0.5 * (1 + z), 0.0), complex(0.5 * x, -0.5 * y)],
        [complex(0.5 * x, 0.5 * y), complex(0.5 * (1 - z), 0.0)],
    ]


def _scale(op, factor: float):
    return [[v * factor for v in row] for row in op]


def _trine_states() -> list:
    s3 = math.sqrt(3.0)
    return [
        _bloch_state((0.0, 0.0, 1.0)),
        _bloch_state((s3 / 2, 0.0, -0.5)),
        _bloch_state((-s3 / 2, 0.0, -0.5)),
    ]


def _tetrahedron_vectors() -> list[tuple[float, float, float]]:
    s = 1.0 / math.sqrt(3.0)
    return [(s, s, s), (s, -s, -s), (-s, s, -s), (-s, -s, s)]


def _library_entries() -> list[LibraryWitness]:
    half, third, quarter = Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)
    f = Fraction
    entries: list[LibraryWitness] = []

    trine = _trine_states()
    entries.append(
        LibraryWitness(
            "trine",
            QuantumModel(2, tuple(trine), tuple(_scale(s, 2.0 / 3.0) for s in trine),
                         name="trine"),
            make_D(3, third),
        )
    )

    # The excluded-column convention puts the zero of row i in column n-1-i,
    # so complement models list their states in reverse order.
    eye2 = [[1.0 + 0j, 0j], [0j, 1.0 + 0j]]
    complement = [
        _scale([[eye2[i][j] - s[i][j] for j in range(2)] for i in range(2)], 2.0 / 3.0)
        for s in trine
    ]
    entries.append(
        LibraryWitness(
            "trine-complement",
            QuantumModel(2, tuple(reversed(trine)), tuple(complement),
                         name="trine-complement"),
            make_A(3),
        )
    )

    tetra = [_bloch_state(v) for v in _tetrahedron_vectors()]
    anti = [
        _scale([[eye2[i][j] - s[i][j] for j in range(2)] for i in range(2)], 0.5)
        for s in tetra
    ]
    entries.append(
        LibraryWitness(
            "tetrahedron",
            QuantumModel(2, tuple(reversed(tetra)), tuple(anti), name="tetrahedron"),
            make_A(4),
        )
    )

    # Two qubit models whose equal mixture has a constant 2/3 diagonal yet is
    # not the symmetric-noise matrix; entries are exact rationals and each
    # state is the top eigenstate of the matching effect.
    states_a = (
        ((half, half), (half, half)),
        (
            ((half, f(0)), (f(0), f(-1, 2))),
            ((f(0), half), (half, f(0))),
        ),
        (
            ((half, f(0)), (f(-3, 10), f(2, 5))),
            ((f(-3, 10), f(-2, 5)), (half, f(0))),
        ),
    )
    effects_a = (
        ((quarter, quarter), (quarter, quarter)),
        (
            ((third, f(0)), (f(0), f(-1, 3))),
            ((f(0), third), (third, f(0))),
        ),
        (
            ((f(5, 12), f(0)), (f(-1, 4), third)),
            ((f(-1, 4), f(-1, 3)), (f(5, 12), f(0))),
        ),
    )
    target_a = CommMatrix.from_rows(
        [
            ["1/2", "1/3", "1/6"],
            ["1/4", "2/3", "1/12"],
            ["1/10", "1/15", "5/6"],
        ]
    )
    entries.append(
        LibraryWitness(
            "nonconvexity-a",
            QuantumModel(2, states_a, effects_a, name="nonconvexity-a"),
            target_a,
        )
    )
    states_b = (states_a[2], states_a[1], states_a[0])
    effects_b = (effects_a[2], effects_a[1], effects_a[0])
    target_b = CommMatrix.from_rows(
        [
            ["5/6", "1/15", "1/10"],
            ["1/12", "2/3", "1/4"],
            ["1/6", "1/3", "1/2"],
        ]
    )
    entries.append(
        LibraryWitness(
            "nonconvexity-b",
            QuantumModel(2, states_b, effects_b, name="nonconvexity-b"),
            target_b,
        )
    )

    # Two antipodal effect pairs along x and y; states are the rescaled effects.
    effects_xy = (
        ((quarter, quarter), (quarter, quarter)),
        ((quarter, -quarter), (-quarter, quarter)),
        (
            ((quarter, f(0)), (f(0), f(-1, 4))),
            ((f(0), quarter), (quarter, f(0))),
        ),
        (
            ((quarter, f(0)), (f(0), quarter)),
            ((f(0), f(-1, 4)), (quarter, f(0))),
        ),
    )
    states_xy = tuple(
        tuple(tuple((2 * _exact_entry(v)[0], 2 * _exact_entry(v)[1]) for v in row) for row in op)
        for op in effects_xy
    )
    target_xy = CommMatrix.from_rows(
        [
            ["1/2", "0", "1/4", "1/4"],
            ["0", "1/2", "1/4", "1/4"],
            ["1/4", "1/4", "1/2", "0"],
            ["1/4", "1/4", "0", "1/2"],
        ]
    )
    entries.append(
        LibraryWitness(
            "pauli-xy",
            QuantumModel(2, states_xy, effects_xy, name="pauli-xy"),
            target_xy,
        )
    )

    # Qutrit model for the 6x4 partial-ignorance matrix: effects from the
    # tetrahedron directions embedded in R^3, states orthogonal to the two
    # excluded directions (cross products).
    vs = [np.array(v) for v in _tetrahedron_vectors()]
    effects_g = [
        [[complex(0.75 * v[i] * v[j]) for j in range(3)] for i in range(3)] for v in vs
    ]
    states_g = []
    for pair in combinations(range(4), 2):
        comp = [k for k in range(4) if k not in pair]
        psi = np.cross(vs[comp[0]], vs[comp[1]])
        psi = psi / np.linalg.norm(psi)
        states_g.append([[complex(psi[i] * psi[j]) for j in range(3)] for i in range(3)])
    entries.append(
        LibraryWitness(
            "partial-ignorance-qutrit",
            QuantumModel(3, tuple(states_g), tuple(effects_g), name="partial-ignorance-qutrit"),
            make_G(4, 2),
        )
    )
    return entries


_LIBRARY: list[LibraryWitness] | None = None


def witness_library() -> list[LibraryWitness]:
    """The built-in verified models; each entry reproduces its target matrix."""
    global _LIBRARY
    if _LIBRARY is None:
        _LIBRARY = _library_entries()
    return _LIBRARY


@dataclass(frozen=True)
class QubitRefutation:
    rule: str
    detail: str


def qubit_screen(c: CommMatrix) -> QubitRefutation | None:
    """Cheap necessary conditions for a qubit implementation.

    Silence is not a confirmation; the rules are the decoding bound, the trace
    bound for square matrices, and any dimension-3 lower-bound rule firing.
    """
    lm = lambda_max(c)
    if lm > 2:
        return QubitRefutation("lambda_max", f"lambda_max = {lm} > 2")
    if c.n_rows == c.n_cols:
        tr = sum(c.rows[i][i] for i in range(c.n_rows))
        if tr > 2:
            return QubitRefutation("trace", f"trace = {tr} > 2")
    lo, tags = psd_lower(c)
    if lo >= 3:
        return QubitRefutation("psd_lower", f"dimension lower bound {lo} via {tags}")
    return None


def _find_scaled_submatrix(inner: CommMatrix, outer: CommMatrix, cap: int = 200_000) -> bool:
    """Is t * inner a submatrix of outer for some rational t > 0?"""
    a, b = inner.shape
    n, m = outer.shape
    if a > n or b > m:
        return False
    row_combos = math.comb(n, a) * math.comb(m, b)
    if row_combos > cap:
        return False
    pivot = next(
        ((i, j) for i in range(a) for j in range(b) if inner.rows[i][j] != 0)
    )
    for rows_sel in combinations(range(n), a):
        for cols_sel in combinations(range(m), b):
            ref = outer.rows[rows_sel[pivot[0]]][cols_sel[pivot[1]]]
            if ref == 0:
                continue
            t = ref / inner.rows[pivot[0]][pivot[1]]
            if t <= 0:
                continue
            if all(
                outer.rows[rows_sel[i]][cols_sel[j]] == t * inner.rows[i][j]
                for i in range(a)
                for j in range(b)
            ):
                return True
    return False


def scaled_submatrix_bound(inner: CommMatrix, outer: CommMatrix, budget_ms: int = 5_000) -> int | None:
    """Upper bound on the quantum dimension of ``inner`` when a positive
    rescaling of it sits inside ``outer``: dropping rows and columns of a
    factorization never raises the dimension.
    """
    if not _find_scaled_submatrix(inner, outer):
        return None
    bounds = quantum_dim_bounds(outer, budget_ms=budget_ms, use_submatrix=False)
    return bounds.upper


def psd_factorization(
    target: np.ndarray,
    k: int,
    starts: int = 64,
    iters: int = 400,
    tol: float = 1e-9,
    seed: int = 0,
) -> tuple[float, np.ndarray, np.ndarray] | None:
    """Search for k x k Hermitian PSD factors with tr(A_i B_j) ~= target[i, j].

    Factors are parameterized as U U^dagger; local refinement by L-BFGS from
    random starts.  Returns (max entry residual, A stack, B stack) on success,
    None otherwise.  Numeric and non-certified by construction.
    """
    from scipy.optimize import minimize

    n, m = target.shape
    rng = np.random.default_rng(seed)
    npar = (n + m) * k * k * 2

    def unpack(x):
        z = x.reshape(n + m, 2, k, k)
        u = z[:, 0] + 1j * z[:, 1]
        return u[:n], u[n:]

    def objective(x):
        us, vs = unpack(x)
        a = np.einsum("iab,icb->iac", us, us.conj())
        b = np.einsum("jab,jcb->jac", vs, vs.conj())
        e = np.einsum("iab,jba->ij", a, b).real - target
        grad_u = 4.0 * np.einsum("ij,jab,ibc->iac", e, b, us)
        grad_v = 4.0 * np.einsum("ij,iab,jbc->jac", e, a, vs)
        g = np.concatenate(
            [
                np.stack([grad_u.real, grad_u.imag], axis=1).ravel(),
                np.stack([grad_v.real, grad_v.imag], axis=1).ravel(),
            ]
        )
        return float(np.sum(e * e)), g

    best = None
    for _ in range(starts):
        x0 = rng.normal(scale=0.5, size=npar)
        res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                       options={"maxiter": iters})
        us, vs = unpack(res.x)
        a = np.einsum("iab,icb->iac", us, us.conj())
        b = np.einsum("jab,jcb->jac", vs, vs.conj())
        resid = float(np.max(np.abs(np.einsum("iab,jba->ij", a, b).real - target)))
        if best is None or resid < best[0]:
            best = (resid, a, b)
        if resid <= tol:
            return best
    if best is not None and best[0] <= tol:
        return best
    return None


def model_from_factorization(a: np.ndarray, b: np.ndarray, tol: float = 1e-7) -> QuantumModel:
    """Normalize raw PSD factors into states (trace 1) and a POVM.

    With S the sum of the B factors, conjugating by S^(+-1/2) preserves all
    trace products; the effect completion on the null space of S keeps the
    POVM summing to the identity.
    """
    k = a.shape[1]
    s = b.sum(axis=0)
    vals, vecs = np.linalg.eigh((s + s.conj().T) / 2)
    cut = max(vals.max(), 1.0) * 1e-12
    root = vecs @ np.diag(np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    inv_vals = np.array([1 / math.sqrt(v) if v > cut else 0.0 for v in vals])
    inv_root = vecs @ np.diag(inv_vals) @ vecs.conj().T
    proj = vecs @ np.diag((vals > cut).astype(float)) @ vecs.conj().T
    states = []
    for ai in a:
        rho = root @ ai @ root
        tr = np.trace(rho).real
        states.append(rho / tr if abs(tr) > 1e-300 else np.eye(k) / k)
    effects = [inv_root @ bj @ inv_root for bj in b]
    effects[0] = effects[0] + (np.eye(k) - proj)
    to_rows = lambda mat: tuple(tuple(complex(v) for v in row) for row in mat)
    return QuantumModel(
        k,
        tuple(to_rows(s_) for s_ in states),
        tuple(to_rows(e_) for e_ in effects),
        name="numeric-factorization",
        tol=tol,
    )


def psd_upper(
    c: CommMatrix,
    budget_ms: int = 10_000,
    nneg: int | IntBounds | None = None,
    use_heuristic: bool = True,
    use_submatrix: bool = True,
    lower: int | None = None,
) -> tuple[int, list[str], tuple[QuantumModel | None, float] | None]:
    """Upper bound on the quantum dimension with provenance tags.

    Combines the nonnegative-rank bound, exact-match library witnesses,
    scaled-submatrix containment in library targets, and (budget permitting)
    the numeric factorization heuristic; heuristic results carry a residual
    and are flagged non-certified.
    """
    if nneg is None:
        nneg = nneg_rank_cheap_bounds(c)
    nneg_hi = nneg if isinstance(nneg, int) else nneg.hi
    upper = nneg_hi
    methods = [f"nneg_rank<={nneg_hi}"]
    witness: tuple[QuantumModel | None, float] | None = None
    if lower is None:
        lower = psd_lower(c)[0]
    for entry in witness_library():
        if (len(entry.model.states), len(entry.model.effects)) != c.shape:
            continue
        ok, _ = verify_model(entry.model, c)
        if ok and entry.model.dim < upper:
            upper = entry.model.dim
            methods.append(f"library:{entry.name}")
    if use_submatrix and upper > lower:
        for entry in witness_library():
            if entry.model.dim < upper and _find_scaled_submatrix(c, entry.target):
                upper = entry.model.dim
                methods.append(f"submatrix:{entry.name}")
    if use_heuristic and upper > lower and budget_ms >= 1000:
        tf = np.array([[float(x) for x in row] for row in c.rows])
        size_factor = c.n_rows * c.n_cols
        starts = max(8, min(64, int(budget_ms / (25 * max(1, size_factor)))))
        for k in range(max(lower, 1), upper):
            found = psd_factorization(tf, k, starts=starts)
            if found is not None:
                resid, a, b = found
                try:
                    model = model_from_factorization(a, b)
                except ModelError:
                    model = None
                upper = k
                methods.append(f"heuristic:k={k}")
                witness = (model, resid)
                break
    return upper, methods, witness


def classical_dim(c: CommMatrix, budget_ms: int = 60_000) -> int | IntBounds:
    """Smallest classical system implementing the matrix (= nonnegative rank)."""
    return nneg_rank(c, budget_ms=budget_ms)


def quantum_dim_bounds(
    c: CommMatrix,
    budget_ms: int = 10_000,
    nneg: int | IntBounds | None = None,
    use_heuristic: bool = True,
    use_submatrix: bool = True,
) -> PsdBounds:
    """Bracket on the minimal quantum dimension implementing the matrix."""
    lo, tags = psd_lower(c)
    hi, methods, witness = psd_upper(
        c,
        budget_ms=budget_ms,
        nneg=nneg,
        use_heuristic=use_heuristic,
        use_submatrix=use_submatrix,
        lower=lo,
    )
    return PsdBounds(
        lower=lo,
        upper=max(hi, lo),
        lambda_max_bound=lambda_max(c),
        methods=tuple([f"lower:{t}" for t in tags] + methods),
        numeric_witness=witness,
    )
