"""Certified decisions of the processing order between communication matrices.

``decide(C, D)`` answers whether C = L @ D @ R for some row-stochastic L, R,
with a tri-state outcome.  Soundness is structural: a Majorizes verdict always
carries an exactly verified witness pair, a NotMajorizes verdict always
carries a certificate that re-verifies from scratch, and everything else is
Unknown.  The refutation engine for instances no monotone separates lives in
``bnb``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import rank2_factorization
from .matrix import (
    CommMatrix,
    MatrixError,
    StochasticPair,
    as_fraction,
    make_D,
    make_identity,
    multiply,
)
from .monotones import (
    InvariantViolation,
    iota,
    lambda_max,
    lambda_min,
    nneg_rank_cheap_bounds,
    nneg_rank_shortcut,
    rank,
)
from .simplex import hull_projection_linf

__all__ = [
    "Verdict",
    "MonotoneSeparation",
    "ExactWitness",
    "ClosedForm",
    "BranchBoundCertificate",
    "SearchConfig",
    "screen",
    "search_witness",
    "decide",
    "decide_certified",
    "equivalent",
    "compose_witnesses",
    "decide_D_family",
    "d_family_witness",
    "qudit_D_interval",
    "is_D_family",
    "identity_target_witness",
]

MAJORIZES = "Majorizes"
NOT_MAJORIZES = "NotMajorizes"
UNKNOWN = "Unknown"


# ---------------------------------------------------------------------------
# Certificates


@dataclass(frozen=True)
class MonotoneSeparation:
    """Refutation: a monotone is strictly larger on C than on D."""

    monotone: str
    value_on_c: str
    value_on_d: str

    def recheck(self, c: CommMatrix, d: CommMatrix) -> bool:
        from .quantum import psd_lower, psd_upper

        if self.monotone == "rank":
            return rank(c) > rank(d)
        if self.monotone == "lambda_max":
            return lambda_max(c) > lambda_max(d)
        if self.monotone == "lambda_min":
            return lambda_min(c) > lambda_min(d)
        if self.monotone == "iota":
            return iota(c) > iota(d)
        if self.monotone == "nneg_rank":
            return nneg_rank_cheap_bounds(c).lo > nneg_rank_cheap_bounds(d).hi
        if self.monotone == "psd_rank":
            return psd_lower(c)[0] > psd_upper(d, use_heuristic=False)[0]
        return False

    def to_json(self) -> dict:
        return {
            "type": "monotone_separation",
            "monotone": self.monotone,
            "value_on_C": self.value_on_c,
            "value_on_D": self.value_on_d,
        }


@dataclass(frozen=True)
class ExactWitness:
    """Confirmation: C equals L @ D @ R with the stored exact pair."""

    pair: StochasticPair

    def recheck(self, c: CommMatrix, d: CommMatrix) -> bool:
        return self.pair.verifies(c, d)

    def to_json(self) -> dict:
        return {"type": "exact_witness"}


@dataclass(frozen=True)
class ClosedForm:
    """Decision by a named closed-form rule."""

    rule: str
    detail: str = ""

    def recheck(self, c: CommMatrix, d: CommMatrix) -> bool:
        if self.rule == "identical":
            return c == d
        if self.rule == "identity-target":
            return _is_identity(d) and d.n_rows >= min(c.shape)
        if self.rule == "nneg-shortcut":
            s = nneg_rank_shortcut(c)
            return _is_identity(d) and s is not None and s <= d.n_rows
        if self.rule == "d-family-interval":
            pc, pd = is_D_family(c), is_D_family(d)
            return (
                pc is not None
                and pd is not None
                and pc[0] == pd[0]
                and decide_D_family(pc[0], pd[1], pc[1])
            )
        return False

    def to_json(self) -> dict:
        return {"type": "closed_form", "rule": self.rule, "detail": self.detail}


@dataclass(frozen=True)
class BranchBoundCertificate:
    """Refutation: every branch of the search tree carries an exact rational
    lower bound on the best-approximation residual, all strictly positive.
    """

    margin: Fraction
    nodes: int
    leaves: tuple = ()

    def recheck(self, c: CommMatrix, d: CommMatrix) -> bool:
        from .bnb import recheck_certificate

        return recheck_certificate(self, c, d)

    def to_json(self) -> dict:
        return {
            "type": "branch_bound",
            "margin": str(self.margin),
            "nodes": self.nodes,
            "leaves": len(self.leaves),
        }


Certificate = MonotoneSeparation | ExactWitness | ClosedForm | BranchBoundCertificate


@dataclass(frozen=True)
class Verdict:
    outcome: str
    certificate: Certificate | None
    witness: StochasticPair | None = None
    residual: float | None = None
    elapsed: float = 0.0

    def to_json(self) -> dict:
        payload: dict = {"outcome": self.outcome}
        if self.certificate is not None:
            payload["certificate"] = self.certificate.to_json()
        if self.witness is not None:
            payload["witness"] = self.witness.to_json()
        if self.residual is not None:
            payload["residual"] = self.residual
        payload["elapsed_s"] = round(self.elapsed, 6)
        return payload


def _verdict_majorizes(
    c: CommMatrix, d: CommMatrix, cert: Certificate, pair: StochasticPair, t0: float
) -> Verdict:
    if not pair.verifies(c, d):
        raise InvariantViolation("majorization witness failed exact verification")
    return Verdict(MAJORIZES, cert, witness=pair, elapsed=time.monotonic() - t0)


def _verdict_not_majorizes(
    c: CommMatrix, d: CommMatrix, cert: Certificate, t0: float
) -> Verdict:
    if not cert.recheck(c, d):
        raise InvariantViolation("refutation certificate failed re-verification")
    return Verdict(NOT_MAJORIZES, cert, elapsed=time.monotonic() - t0)


# ---------------------------------------------------------------------------
# Screening


def screen(c: CommMatrix, d: CommMatrix) -> MonotoneSeparation | None:
    """First monotone strictly reversed between C and D, if any.

    Evaluates rank, lambda_max, lambda_min, iota, the cheap nonnegative-rank
    bracket and the quantum-dimension bracket (certified rules only, compared
    as lower(C) > upper(D)).
    """
    from .quantum import psd_lower, psd_upper

    rc, rd = rank(c), rank(d)
    if rc > rd:
        return MonotoneSeparation("rank", str(rc), str(rd))
    xc, xd = lambda_max(c), lambda_max(d)
    if xc > xd:
        return MonotoneSeparation("lambda_max", str(xc), str(xd))
    nc, nd = lambda_min(c), lambda_min(d)
    if nc > nd:
        return MonotoneSeparation("lambda_min", str(nc), str(nd))
    ic, id_ = iota(c), iota(d)
    if ic > id_:
        return MonotoneSeparation("iota", str(ic), str(id_))
    blo, bhi = nneg_rank_cheap_bounds(c), nneg_rank_cheap_bounds(d)
    if blo.lo > bhi.hi:
        return MonotoneSeparation("nneg_rank", f">={blo.lo}", f"<={bhi.hi}")
    plo = psd_lower(c)[0]
    phi = psd_upper(d, use_heuristic=False)[0]
    if plo > phi:
        return MonotoneSeparation("psd_rank", f">={plo}", f"<={phi}")
    return None


# ---------------------------------------------------------------------------
# Witness search (heuristic confirmation with exact acceptance)


@dataclass(frozen=True)
class SearchConfig:
    starts: int = 32
    iters: int = 200
    seed: int = 0
    den_cap: int = 10**6
    tol: float = 1e-9
    time_cap_s: float = 15.0


def _float_matrix(c: CommMatrix) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in c.rows])


def _row_fit_float(target_rows: np.ndarray, gen: np.ndarray) -> tuple[float, np.ndarray]:
    """Per-row best max-norm fit of targets by convex combinations of gen rows."""
    from scipy.optimize import linprog

    k, m = gen.shape
    n = target_rows.shape[0]
    out = np.zeros((n, k))
    worst = 0.0
    cvec = np.zeros(k + 1)
    cvec[-1] = 1.0
    a_ub = np.zeros((2 * m, k + 1))
    a_ub[:m, :k] = gen.T
    a_ub[m:, :k] = -gen.T
    a_ub[:, -1] = -1.0
    a_eq = np.zeros((1, k + 1))
    a_eq[0, :k] = 1.0
    for i in range(n):
        b_ub = np.concatenate([target_rows[i], -target_rows[i]])
        res = linprog(cvec, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                      bounds=[(0, None)] * k + [(0, None)], method="highs")
        if not res.success:
            return float("inf"), out
        out[i] = res.x[:k]
        worst = max(worst, res.x[-1])
    return worst, out


def _fit_right_float(cf: np.ndarray, q: np.ndarray, b: int) -> tuple[float, np.ndarray]:
    """Best max-norm fit min_R ||C - Q R||_inf over row-stochastic R."""
    from scipy.optimize import linprog

    n = cf.shape[0]
    d = q.shape[1]
    nv = d * b + 1
    cvec = np.zeros(nv)
    cvec[-1] = 1.0
    rows_ub = []
    rhs_ub = []
    for i in range(n):
        for j in range(b):
            row = np.zeros(nv)
            for l in range(d):
                row[l * b + j] = q[i, l]
            row[-1] = -1.0
            rows_ub.append(row)
            rhs_ub.append(cf[i, j])
            rows_ub.append(np.concatenate([-row[:-1], [-1.0]]))
            rhs_ub.append(-cf[i, j])
    a_eq = np.zeros((d, nv))
    for l in range(d):
        a_eq[l, l * b : (l + 1) * b] = 1.0
    res = linprog(
        cvec,
        A_ub=np.array(rows_ub),
        b_ub=np.array(rhs_ub),
        A_eq=a_eq,
        b_eq=np.ones(d),
        bounds=[(0, None)] * nv,
        method="highs",
    )
    if not res.success:
        return float("inf"), np.zeros((d, b))
    return res.x[-1], res.x[:-1].reshape(d, b)


def _round_stochastic(matrix: np.ndarray, den_cap: int) -> CommMatrix | None:
    rows = []
    for raw in matrix:
        row = [max(Fraction(0), Fraction(float(x)).limit_denominator(den_cap)) for x in raw]
        total = sum(row)
        if total == 0:
            row = [Fraction(1, len(row))] * len(row)
        else:
            row = [x / total for x in row]
        rows.append(tuple(row))
    try:
        return CommMatrix(tuple(rows))
    except MatrixError:
        return None


def exactify_from_right(
    c: CommMatrix, d: CommMatrix, r_float: np.ndarray, den_caps: Sequence[int] = (16, 64, 4096, 10**6)
) -> StochasticPair | None:
    """Round R to exact rationals, then fit L exactly row by row.

    The left factor is recovered with exact simplex projections onto the hull
    of the rows of D @ R, so an accepted pair verifies by construction.
    """
    for cap in den_caps:
        r_exact = _round_stochastic(r_float, cap)
        if r_exact is None:
            continue
        dr = multiply(d, r_exact)
        lam_rows = []
        ok = True
        for i in range(c.n_rows):
            t, lam = hull_projection_linf(c.rows[i], dr.rows)
            if t != 0:
                ok = False
                break
            lam_rows.append(tuple(lam))
        if ok:
            pair = StochasticPair(CommMatrix(tuple(lam_rows)), r_exact)
            if pair.verifies(c, d):
                return pair
    return None


def _start_candidates(
    cd_shape: tuple[int, int, int, int], cfg: SearchConfig
) -> list[np.ndarray]:
    n, b, c_rows, d_cols = cd_shape
    rng = np.random.default_rng(cfg.seed)
    starts: list[np.ndarray] = []
    if d_cols == b:
        starts.append(np.eye(d_cols))
    starts.append(np.full((d_cols, b), 1.0 / b))
    while len(starts) < cfg.starts:
        kind = len(starts) % 2
        if kind == 0:  # random vertex: each row a basis vector
            r = np.zeros((d_cols, b))
            r[np.arange(d_cols), rng.integers(0, b, size=d_cols)] = 1.0
        else:
            r = rng.random((d_cols, b))
            r /= r.sum(axis=1, keepdims=True)
        starts.append(r)
    return starts


def search_witness(
    c: CommMatrix, d: CommMatrix, config: SearchConfig | None = None
) -> StochasticPair | None:
    """Alternating heuristic search for an exact witness pair.

    Alternates max-norm LP fits of L (per row, against the hull of D @ R) and
    of R; candidates below tolerance are rounded to rationals and accepted
    only on exact verification.  Absence of a witness is a legitimate result.
    """
    cfg = config or SearchConfig()
    n, b = c.shape
    c_rows, d_cols = d.shape
    cf = _float_matrix(c)
    df = _float_matrix(d)
    deadline = time.monotonic() + cfg.time_cap_s
    for r0 in _start_candidates((n, b, c_rows, d_cols), cfg):
        # Exact fast path first: with this R fixed, a zero exact residual for
        # every row already yields a verified witness.
        pair = exactify_from_right(c, d, r0, den_caps=(cfg.den_cap,))
        if pair is not None:
            return pair
        r = r0.copy()
        best = float("inf")
        stall = 0
        for _ in range(cfg.iters):
            if time.monotonic() > deadline:
                break
            resid_l, lf = _row_fit_float(cf, df @ r)
            resid_r, r = _fit_right_float(cf, lf @ df, b)
            resid = min(resid_l, resid_r)
            if resid < cfg.tol:
                pair = exactify_from_right(c, d, r)
                if pair is not None:
                    return pair
            if resid >= best - 1e-12:
                stall += 1
                if stall >= 12:
                    break
            else:
                best = resid
                stall = 0
        if time.monotonic() > deadline:
            break
    return None


# ---------------------------------------------------------------------------
# Closed-form families


def is_D_family(c: CommMatrix) -> tuple[int, Fraction] | None:
    """Recognize a symmetric-noise family member; returns (n, eps)."""
    n, m = c.shape
    if n != m or n < 2:
        return None
    diag = c.rows[0][0]
    off = c.rows[0][1]
    for i in range(n):
        for j in range(n):
            want = diag if i == j else off
            if c.rows[i][j] != want:
                return None
    eps = off * (n - 1)
    if diag != 1 - eps:
        return None
    return n, eps


def decide_D_family(n: int, eps, mu) -> bool:
    """Does the (n, eps) family member majorize the (n, mu) member?

    Exact interval test: for eps in the distinguishability half the reachable
    parameters are [eps, 1 - eps/(n-1)]; mirrored on the other half.
    """
    e, m = as_fraction(eps), as_fraction(mu)
    if n < 2:
        raise MatrixError("n must be >= 2")
    for name, v in (("eps", e), ("mu", m)):
        if not 0 <= v <= 1:
            raise MatrixError(f"{name} out of [0, 1]: {v}")
    edge = 1 - Fraction(e, n - 1)
    if e <= 1 - Fraction(1, n):
        return e <= m <= edge
    return edge <= m <= e


def d_family_witness(n: int, eps, mu) -> StochasticPair:
    """Exact witness L with L @ D(n, eps) = D(n, mu), R = identity.

    L interpolates between the identity and the zero-diagonal extreme member;
    the mixing weight solves the image-parameter equation exactly.
    """
    e, m = as_fraction(eps), as_fraction(mu)
    if not decide_D_family(n, e, m):
        raise MatrixError(f"(eps={e}, mu={m}) not reachable within the family")
    boundary = 1 - Fraction(1, n)
    if e == boundary:
        lam = Fraction(1)  # only mu == 1 - 1/n is reachable
    else:
        lam = (1 - m - Fraction(e, n - 1)) / (1 - Fraction(e * n, n - 1))
    if not 0 <= lam <= 1:
        raise InvariantViolation(f"family witness weight {lam} outside [0, 1]")
    d1 = make_D(n, 1)
    eye = make_identity(n)
    left = CommMatrix(
        tuple(
            tuple(lam * eye.rows[i][j] + (1 - lam) * d1.rows[i][j] for j in range(n))
            for i in range(n)
        )
    )
    pair = StochasticPair(left, eye)
    if multiply(left, make_D(n, e)) != make_D(n, m):
        raise InvariantViolation("family witness failed exact verification")
    return pair


@dataclass(frozen=True)
class FamilyInterval:
    """Feasible noise parameters for n inputs at quantum dimension d."""

    lo: Fraction
    hi: Fraction
    exact: bool
    note: str = ""

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def to_json(self) -> dict:
        return {"lo": str(self.lo), "hi": str(self.hi), "exact": self.exact, "note": self.note}


def qudit_D_interval(n: int, d: int) -> FamilyInterval:
    """Noise parameters eps with an (n, eps) implementation on d-dimensional
    quantum systems; exact where known, otherwise the decoding outer bound.
    """
    if n < 1 or d < 1:
        raise MatrixError("n and d must be positive")
    if n <= d:
        return FamilyInterval(Fraction(0), Fraction(1), True)
    if n > d * d:
        v = 1 - Fraction(1, n)
        return FamilyInterval(v, v, True, "only the uniform matrix is reachable")
    lo = 1 - Fraction(d, n)
    if d == 2 and n in (3, 4):
        return FamilyInterval(lo, Fraction(1), True)
    return FamilyInterval(lo, Fraction(1), False, "bound only")


# ---------------------------------------------------------------------------
# Identity-target constructions


def _is_identity(c: CommMatrix) -> bool:
    return c.n_rows == c.n_cols and c == make_identity(c.n_rows)


def identity_target_witness(c: CommMatrix, k: int) -> StochasticPair | None:
    """Explicit witness for C = L @ I_k @ R when one is constructible.

    Covers k at least the smaller side of C, and rank-2 (or rank-1) matrices
    via the segment factorization.
    """
    n, m = c.shape
    zero, one = Fraction(0), Fraction(1)
    if k >= m:
        left = CommMatrix(tuple(row + (zero,) * (k - m) for row in c.rows))
        right_rows = [tuple(one if i == j else zero for j in range(m)) for i in range(m)]
        right_rows += [(one,) + (zero,) * (m - 1)] * (k - m)
        return StochasticPair(left, CommMatrix(tuple(right_rows)))
    if k >= n:
        left_rows = [
            tuple(one if i == j else zero for j in range(k)) for i in range(n)
        ]
        right_rows = list(c.rows) + [(one,) + (zero,) * (m - 1)] * (k - n)
        return StochasticPair(CommMatrix(tuple(left_rows)), CommMatrix(tuple(right_rows)))
    if len(set(c.rows)) == 1:  # rank 1: one shared row through a single state
        left = CommMatrix(tuple(((one,) + (zero,) * (k - 1)) for _ in range(n)))
        right_rows = [c.rows[0]] + [(one,) + (zero,) * (m - 1)] * (k - 1)
        return StochasticPair(left, CommMatrix(tuple(right_rows)))
    fac = rank2_factorization(c.rows)
    if fac is not None and k >= 2:
        lrows, rrows = fac
        left = CommMatrix(tuple(tuple(r) + (zero,) * (k - 2) for r in lrows))
        right_rows = [tuple(r) for r in rrows] + [
            (one,) + (zero,) * (m - 1)
        ] * (k - 2)
        return StochasticPair(left, CommMatrix(tuple(right_rows)))
    return None


# ---------------------------------------------------------------------------
# The decision pipeline


def decide(
    c: CommMatrix,
    d: CommMatrix,
    budget_ms: int = 60_000,
    config: SearchConfig | None = None,
) -> Verdict:
    """Tri-state decision of C = L @ D @ R with a mandatory certificate.

    Pipeline: trivial identities, identity targets via nonnegative-rank
    shortcuts, the closed-form symmetric-noise family rule, monotone
    screening, heuristic witness search with exact acceptance, then the
    certified branch-and-bound refutation engine.
    """
    t0 = time.monotonic()
    if c == d:
        pair = StochasticPair(make_identity(c.n_rows), make_identity(c.n_cols))
        return _verdict_majorizes(c, d, ClosedForm("identical"), pair, t0)

    if _is_identity(d):
        k = d.n_rows
        s = nneg_rank_shortcut(c)
        if s is not None and s > k:
            cert = MonotoneSeparation("nneg_rank", str(s), str(k))
            return _verdict_not_majorizes(c, d, cert, t0)
        if s is not None and s <= k:
            pair = identity_target_witness(c, k)
            if pair is not None:
                return _verdict_majorizes(
                    c, d, ClosedForm("nneg-shortcut", f"nneg_rank={s}<={k}"), pair, t0
                )
        if k >= min(c.shape):
            pair = identity_target_witness(c, k)
            if pair is not None:
                return _verdict_majorizes(c, d, ClosedForm("identity-target"), pair, t0)

    fam_c, fam_d = is_D_family(c), is_D_family(d)
    if fam_c is not None and fam_d is not None and fam_c[0] == fam_d[0]:
        n = fam_c[0]
        if decide_D_family(n, fam_d[1], fam_c[1]):
            pair = d_family_witness(n, fam_d[1], fam_c[1])
            return _verdict_majorizes(
                c, d, ClosedForm("d-family-interval", f"n={n}"), pair, t0
            )
        sep = screen(c, d)
        if sep is None:
            raise InvariantViolation(
                "family interval rule refutes but no decoding-bound separation fires"
            )
        return _verdict_not_majorizes(c, d, sep, t0)

    sep = screen(c, d)
    if sep is not None:
        return _verdict_not_majorizes(c, d, sep, t0)

    budget_s = budget_ms / 1000.0
    cfg = config or SearchConfig(time_cap_s=max(1.0, budget_s * 0.25))
    pair = search_witness(c, d, cfg)
    if pair is not None:
        return _verdict_majorizes(c, d, ExactWitness(pair), pair, t0)

    remaining = max(0.5, budget_s - (time.monotonic() - t0))
    from .bnb import branch_and_bound

    verdict = branch_and_bound(c, d, budget_s=remaining, seed=cfg.seed)
    if verdict.outcome == MAJORIZES:
        return _verdict_majorizes(c, d, verdict.certificate, verdict.witness, t0)
    if verdict.outcome == NOT_MAJORIZES:
        return _verdict_not_majorizes(c, d, verdict.certificate, t0)
    return Verdict(UNKNOWN, None, residual=verdict.residual, elapsed=time.monotonic() - t0)


def decide_certified(c: CommMatrix, d: CommMatrix, budget_ms: int = 60_000, seed: int = 0) -> Verdict:
    """Direct access to the certified branch-and-bound engine."""
    if budget_ms <= 0:
        raise ValueError("budget must be positive")
    from .bnb import branch_and_bound

    return branch_and_bound(c, d, budget_s=budget_ms / 1000.0, seed=seed)


def compose_witnesses(outer: StochasticPair, inner: StochasticPair) -> StochasticPair:
    """From C = L1 @ D @ R1 and D = L2 @ E @ R2, build the pair for C vs E."""
    return StochasticPair(
        multiply(outer.left, inner.left), multiply(inner.right, outer.right)
    )


@dataclass(frozen=True)
class EquivalenceResult:
    outcome: str  # Equivalent | NotEquivalent | Unknown
    forward: Verdict
    backward: Verdict

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "forward": self.forward.to_json(),
            "backward": self.backward.to_json(),
        }


def equivalent(
    c: CommMatrix, d: CommMatrix, budget_ms: int = 60_000
) -> EquivalenceResult:
    """Mutual majorization, Unknown when either direction stays open."""
    fwd = decide(c, d, budget_ms=budget_ms // 2)
    if fwd.outcome == NOT_MAJORIZES:
        return EquivalenceResult("NotEquivalent", fwd, Verdict(UNKNOWN, None))
    bwd = decide(d, c, budget_ms=budget_ms // 2)
    if bwd.outcome == NOT_MAJORIZES:
        return EquivalenceResult("NotEquivalent", fwd, bwd)
    if fwd.outcome == MAJORIZES and bwd.outcome == MAJORIZES:
        return EquivalenceResult("Equivalent", fwd, bwd)
    return EquivalenceResult("Unknown", fwd, bwd)
