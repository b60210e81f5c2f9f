"""Command-line front end.

Subcommands: gen, mono, compare, equiv, nrank, psd, iota, reduce, table1,
dfamily.  Exit codes: 0 on success (a NotMajorizes verdict is a result, not a
failure), 1 on usage or parse errors, 2 on internal invariant violations
(a certificate that fails its own re-verification).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .gallery import GALLERY_ORDER, gallery, reference_monotones
from .majorize import (
    decide,
    decide_D_family,
    d_family_witness,
    equivalent,
    is_D_family,
)
from .matrix import (
    CommMatrix,
    FamilyParams,
    MatrixError,
    make_D,
    multiply,
    parse,
    serialize,
)
from .monotones import (
    InvariantViolation,
    IntBounds,
    iota,
    iota_witness,
    lambda_max,
    lambda_min,
    nneg_rank,
    report,
)
from .quantum import quantum_dim_bounds
from .transforms import reduce as reduce_matrix

DEFAULT_BUDGET_MS = 60_000


def _budget_default() -> int:
    env = os.environ.get("COMMTASK_BUDGET_MS")
    if env:
        try:
            v = int(env)
            if v > 0:
                return v
        except ValueError:
            pass
    return DEFAULT_BUDGET_MS


def _load_matrix(args, attr: str = "matrix") -> CommMatrix:
    value = getattr(args, attr)
    if args.inline:
        return parse(value)
    with open(value, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def _emit(args, payload: dict, pretty_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload))
    else:
        for line in pretty_lines:
            print(line)


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _nneg_payload(value) -> dict:
    if isinstance(value, IntBounds):
        return value.to_json()
    return {"lo": value, "hi": value}


def cmd_gen(args) -> int:
    params = FamilyParams(
        family=args.family,
        n=args.n,
        eps=args.eps,
        t=args.t,
    )
    matrix = params.build()
    text = serialize(matrix, name=args.name)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_mono(args) -> int:
    c = _load_matrix(args)
    rep = report(c, budget_ms=args.budget_ms)
    payload = rep.to_json()
    lines = [
        f"shape        : {c.n_rows} x {c.n_cols}",
        f"rank         : {rep.rank}",
        f"nneg_rank    : {_fmt_bounds(rep.nneg_bounds())}",
        f"psd_rank     : [{rep.psd.lower}, {rep.psd.upper}]  via {', '.join(rep.psd.methods)}",
        f"lambda_max   : {rep.lambda_max}",
        f"lambda_min   : {rep.lambda_min}",
        f"iota         : {rep.iota}",
    ]
    _emit(args, payload, lines)
    return 0


def _fmt_bounds(b: IntBounds) -> str:
    if b.is_exact:
        return str(b.lo)
    note = f" ({b.reason})" if b.reason else ""
    return f"[{b.lo}, {b.hi}]{note}"


def cmd_compare(args) -> int:
    c = _load_matrix(args, "c")
    d = _load_matrix(args, "d")
    verdict = decide(c, d, budget_ms=args.budget_ms)
    payload = verdict.to_json()
    lines = [f"outcome: {verdict.outcome}"]
    if verdict.certificate is not None:
        lines.append(f"certificate: {verdict.certificate.to_json()}")
    if verdict.residual is not None:
        lines.append(f"best residual found: {verdict.residual:.3e}")
    _emit(args, payload, lines)
    return 0


def cmd_equiv(args) -> int:
    c = _load_matrix(args, "c")
    d = _load_matrix(args, "d")
    result = equivalent(c, d, budget_ms=args.budget_ms)
    _emit(args, result.to_json(), [f"outcome: {result.outcome}"])
    return 0


def cmd_nrank(args) -> int:
    c = _load_matrix(args)
    value = nneg_rank(c, budget_ms=args.budget_ms)
    if isinstance(value, IntBounds):
        payload = {"nneg_rank": value.to_json(), "exact": False, "reason": value.reason}
        lines = [f"nneg_rank in {_fmt_bounds(value)}"]
    else:
        payload = {"nneg_rank": _nneg_payload(value), "exact": True}
        lines = [f"nneg_rank = {value}"]
    _emit(args, payload, lines)
    return 0


def cmd_psd(args) -> int:
    c = _load_matrix(args)
    bounds = quantum_dim_bounds(c, budget_ms=args.budget_ms)
    lines = [
        f"psd_rank in [{bounds.lower}, {bounds.upper}]",
        f"methods: {', '.join(bounds.methods)}",
    ]
    if bounds.numeric_witness is not None:
        lines.append(
            f"numeric witness residual {bounds.numeric_witness[1]:.2e} (non-certified)"
        )
    _emit(args, bounds.to_json(), lines)
    return 0


def cmd_iota(args) -> int:
    c = _load_matrix(args)
    value = iota(c)
    pair = iota_witness(c)
    payload = {"iota": value, "witness": pair.to_json()}
    _emit(args, payload, [f"iota = {value}", "witness verified exactly"])
    return 0


def cmd_reduce(args) -> int:
    c = _load_matrix(args)
    reduced, fwd, bwd = reduce_matrix(c)
    payload = {
        "matrix": json.loads(serialize(reduced)),
        "forward": fwd.to_json(),
        "backward": bwd.to_json(),
    }
    _emit(args, payload, [serialize(reduced)])
    return 0


def cmd_table1(args) -> int:
    mats = gallery()
    refs = reference_monotones()
    mismatches = []
    rows = []
    for name in GALLERY_ORDER:
        c = mats[name]
        ref = refs[name]
        rep = report(c, budget_ms=args.budget_ms)
        nneg = rep.nneg_bounds()
        checks = {
            "rank": rep.rank == ref["rank"],
            "nneg_rank": (
                nneg.is_exact and nneg.lo == ref["nneg_rank"]
                if nneg.is_exact
                else nneg.lo <= ref["nneg_rank"] <= nneg.hi
            ),
            "psd_rank": rep.psd.lower <= ref["psd_rank"] <= rep.psd.upper,
            "lambda_min": rep.lambda_min == ref["lambda_min"],
            "iota": rep.iota == ref["iota"],
            "lambda_max": rep.lambda_max == ref["lambda_max"],
        }
        flagged = not nneg.is_exact
        for key, ok in checks.items():
            if not ok:
                mismatches.append(f"{name}: {key}")
        rows.append(
            {
                "name": name,
                "computed": rep.to_json(),
                "reference": {
                    k: (str(v) if isinstance(v, Fraction) else v) for k, v in ref.items()
                },
                "nneg_exact": nneg.is_exact,
                "flagged_interval": flagged,
                "ok": all(checks.values()),
            }
        )
    payload = {"rows": rows, "mismatches": mismatches}
    lines = []
    header = f"{'matrix':<9} {'rank':>4} {'nneg':>8} {'psd':>8} {'l_min':>6} {'iota':>4} {'l_max':>5}  status"
    lines.append(header)
    for row in rows:
        rep = row["computed"]
        nneg = rep["nneg_rank"]
        nneg_s = str(nneg["lo"]) if nneg["lo"] == nneg["hi"] else f"[{nneg['lo']},{nneg['hi']}]*"
        psd = rep["psd"]
        psd_s = f"[{psd['lo']},{psd['hi']}]"
        status = "ok" if row["ok"] else "MISMATCH"
        lines.append(
            f"{row['name']:<9} {rep['rank']:>4} {nneg_s:>8} {psd_s:>8} "
            f"{rep['lambda_min']:>6} {rep['iota']:>4} {rep['lambda_max']:>5}  {status}"
        )
    if mismatches:
        lines.append("mismatches: " + "; ".join(mismatches))
    _emit(args, payload, lines)
    return 0 if not mismatches else 1


def cmd_dfamily(args) -> int:
    n = args.n
    step = args.step
    grid = [Fraction(k) * step for k in range(int(1 / step) + 1)]
    agree = 0
    total = 0
    failures = []
    for eps in grid:
        for mu in grid:
            total += 1
            predicted = decide_D_family(n, eps, mu)
            if predicted:
                pair = d_family_witness(n, eps, mu)
                ok = multiply(pair.left, make_D(n, eps)) == make_D(n, mu)
            else:
                c, d = make_D(n, mu), make_D(n, eps)
                ok = lambda_max(c) > lambda_max(d) or lambda_min(c) > lambda_min(d)
            if ok:
                agree += 1
            else:
                failures.append({"eps": str(eps), "mu": str(mu), "predicted": predicted})
    payload = {
        "n": n,
        "step": str(step),
        "grid_points": total,
        "agreement": agree,
        "failures": failures,
    }
    lines = [f"n={n}: {agree}/{total} grid decisions confirmed"]
    if failures:
        lines.append(f"failures: {failures}")
    _emit(args, payload, lines)
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commtask",
        description="Exact toolkit for communication matrices and their processing order.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--budget-ms",
        type=int,
        default=_budget_default(),
        help="time budget for decision engines (env COMMTASK_BUDGET_MS)",
    )
    parser.add_argument("--tol", type=float, default=1e-9, help="numeric tolerance")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--format", choices=("pretty", "json"), default="pretty", help="output format"
    )
    parser.add_argument(
        "--threads", type=int, default=1, help="worker cap for engine modules"
    )
    parser.add_argument(
        "--inline",
        action="store_true",
        help="treat matrix arguments as inline JSON instead of file paths",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a named family matrix")
    p.add_argument("family", choices=("identity", "uniform", "D", "G", "A"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=_frac, default=None, help="noise parameter (D family)")
    p.add_argument("--t", type=int, default=None, help="revealed count (G family)")
    p.add_argument("--out", default=None, help="write to file instead of stdout")
    p.add_argument("--name", default=None, help="optional name embedded in the file")
    p.set_defaults(func=cmd_gen, _family_fix=True)

    p = sub.add_parser("mono", help="full monotone report for a matrix")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_mono)

    p = sub.add_parser("compare", help="decide whether C is majorized by D")
    p.add_argument("c")
    p.add_argument("d")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("equiv", help="decide mutual majorization")
    p.add_argument("c")
    p.add_argument("d")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("nrank", help="nonnegative rank (exact or bracket)")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_nrank)

    p = sub.add_parser("psd", help="quantum dimension bracket")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("iota", help="orthogonal-row monotone with witness")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_iota)

    p = sub.add_parser("reduce", help="equivalence-preserving normal form")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("table1", help="check the gallery against reference values")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("dfamily", help="grid check of the symmetric-noise order")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--step", type=_frac, default=Fraction(1, 12))
    p.set_defaults(func=cmd_dfamily)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "_family_fix", False):
        args.family = {
            "identity": "Identity",
            "uniform": "Uniform",
            "D": "D",
            "G": "G",
            "A": "A",
        }[args.family]
    try:
        return args.func(args)
    except (MatrixError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
