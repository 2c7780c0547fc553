"""Command-line front end.

    qpolya pmf --dist qpolya --r 1,1,1 --m 1 --n 3 --q 1/2
    qpolya sample --dist inverse-qpolya --r 1,2 --m 1 --n 2 --q 1/2 --samples 100000
    qpolya identity-check
    qpolya converge --dist qpolya --c 1,1,1 --m 1 --n 4 --q 1/2 --exact
    qpolya posterior --r-total 2 --n 1 --x 1 --q 1/2 --exact

Tables go to stdout as CSV (a ``# qpolya <version>`` line, ``# key=value``
metadata lines, then a header row) or as a JSON document
``{"meta": ..., "rows": [...]}``.  Exit codes: 0 success, 1 a check
failed, 2 bad arguments, 3 the computation failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .distributions import (
    LimitKind,
    LimitParams,
    PolyaParams,
    UrnSpec,
    convergence_sweep,
    inverse_qpolya_table,
    negative_q_multinomial_2nd_table,
    posterior_table,
    q_multinomial_2nd_table,
    urn_table,
)
from .errors import DomainError, InfeasibleError, QPolyaError, SupportTooLarge
from .qcore import QBase
from .qidentities import TruncationPolicy, run_finite_suite, run_inverse_suite
from .scalar import LogFloat, to_float
from .urnsim import goodness_of_fit, sample_inverse_qpolya_batch, sample_qpolya_batch

__all__ = ["main", "build_parser", "format_scalar"]

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3
DISTRIBUTIONS = ("qpolya", "inverse-qpolya", "qhyper", "neg-qhyper", "qmult2", "neg-qmult2")
FIXED_M = {"qhyper": -1, "neg-qhyper": 1}


class UsageError(Exception):
    pass


# -- number formatting ---------------------------------------------------------


def format_scalar(v) -> str:
    """17 significant digits; values outside the double range keep their exponent."""
    if isinstance(v, Fraction):
        f = to_float(v)
        if v == 0 or (f != 0 and math.isfinite(f)):
            return f"{f:.17g}"
        with localcontext() as ctx:
            ctx.prec = 17
            return f"{Decimal(v.numerator) / Decimal(v.denominator):.16e}"
    if isinstance(v, LogFloat):
        f = float(v)
        if v.sign == 0 or (f != 0 and math.isfinite(f)):
            return f"{f:.17g}"
        m, e = v.mantissa_exponent()
        with localcontext() as ctx:
            ctx.prec = 30
            return f"{Decimal(m) * Decimal(2) ** e:.16e}"
    return f"{float(v):.17g}"


def _prob_fields(v, exact: bool) -> dict:
    out = {"probability": format_scalar(v)}
    if exact and isinstance(v, Fraction):
        out["numerator"] = str(v.numerator)
        out["denominator"] = str(v.denominator)
    return out


# -- output ------------------------------------------------------------------------


def emit(meta: dict, columns: Sequence[str], rows: Sequence[dict], fmt: str, out) -> None:
    if fmt == "json":
        doc = {"meta": {"version": f"qpolya {__version__}", **meta},
               "rows": [{c: _json_value(r.get(c, "")) for c in columns} for r in rows]}
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    out.write(f"# qpolya {__version__}\n")
    for key, value in meta.items():
        out.write(f"# {key}={json.dumps(value)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([r.get(c, "") for c in columns])


def _json_value(v):
    """Numbers stay numbers when a double holds them; big integers and
    out-of-range decimals are kept as strings."""
    if not isinstance(v, str):
        return v
    try:
        if v.lstrip("-").isdigit():
            n = int(v)
            return n if abs(n) < 2 ** 53 else v
        f = float(v)
    except ValueError:
        return v
    if f == 0 and Decimal(v) != 0:
        return v
    return f if math.isfinite(f) else v


# -- argument parsing ----------------------------------------------------------


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}")


def _numbers(text: str) -> tuple[str, ...]:
    parts = tuple(t.strip() for t in text.split(",") if t.strip())
    for t in parts:
        try:
            Fraction(t)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {t!r}")
    return parts


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--exact", action="store_true", help="rational arithmetic (q must be rational)")
    p.add_argument("--tolerance", type=_positive, default=None)


def _urn_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="qpolya")
    p.add_argument("--k", type=int, default=None, help="number of colours minus one (checked)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=_ints, default=None, help="ball counts r_1..r_{k+1}")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--q", required=True, help="a/b or a decimal")
    rates = p.add_mutually_exclusive_group()
    rates.add_argument("--theta", type=_numbers, default=None)
    rates.add_argument("--lambda", dest="lam", type=_numbers, default=None)
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--wmax", type=int, default=20)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpolya", description=(
        "Multivariate q-Polya and inverse q-Polya distributions."))
    parser.add_argument("--version", action="version", version=f"qpolya {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pmf", help="probability table")
    _urn_args(p)
    _common(p)

    p = sub.add_parser("sample", help="Monte-Carlo run with a goodness-of-fit report")
    _urn_args(p)
    _common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--min-p", type=float, default=1e-3)
    p.add_argument("--samples-out", default=None, help="write the raw samples as CSV")

    p = sub.add_parser("identity-check", help="randomized identity checks")
    _common(p)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--inverse-count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("converge", help="distance to the large-urn limit, r_j = c_j 2^t")
    _common(p)
    p.add_argument("--dist", choices=("qpolya", "inverse-qpolya"), default="qpolya")
    p.add_argument("--c", type=_ints, default=(1, 1, 1))
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--q", default="1/2")
    p.add_argument("--t-min", type=int, default=2)
    p.add_argument("--t-max", type=int, default=10)
    p.add_argument("--scale", choices=("all", "last"), default="all")
    p.add_argument("--wmax", type=int, default=8)
    p.add_argument("--nu", type=int, default=None)

    p = sub.add_parser("posterior", help="class sizes given a q-sample without replacement")
    _common(p)
    p.add_argument("--r-total", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", type=_ints, required=True)
    p.add_argument("--q", required=True)
    return parser


def _rational(text: str) -> bool:
    try:
        Fraction(text)
    except (ValueError, ZeroDivisionError):
        return False
    return True


def _qbase(args) -> QBase:
    try:
        return QBase.of(args.q, exact=args.exact)
    except (DomainError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --q {args.q!r}: {exc}")


def _urn(args, q: QBase) -> UrnSpec:
    if args.r is None:
        raise UsageError(f"--dist {args.dist} needs --r")
    m = FIXED_M.get(args.dist, args.m)
    if m is None:
        raise UsageError(f"--dist {args.dist} needs --m")
    if args.dist in FIXED_M and args.m is not None and args.m != m:
        raise UsageError(f"--dist {args.dist} fixes m = {m}")
    if args.k is not None and args.k != len(args.r) - 1:
        raise UsageError(f"--k {args.k} does not match {len(args.r)} ball counts")
    return UrnSpec(args.r, m, q)


def _limit(args, q: QBase) -> LimitParams:
    if args.m is None:
        raise UsageError(f"--dist {args.dist} needs --m")
    if args.theta is not None:
        kind, raw = LimitKind.THETA, args.theta
    elif args.lam is not None:
        kind, raw = LimitKind.LAMBDA, args.lam
    else:
        raise UsageError(f"--dist {args.dist} needs --theta or --lambda")
    if args.k is not None and args.k != len(raw):
        raise UsageError(f"--k {args.k} does not match {len(raw)} rates")
    rates = tuple(Fraction(t) if args.exact else float(Fraction(t)) for t in raw)
    return LimitParams(kind, rates, q, args.m, args.nu)


def _table(args, q: QBase):
    dist = args.dist
    if dist in ("qpolya", "qhyper", "neg-qhyper"):
        return urn_table(_urn(args, q), args.n)
    if dist == "inverse-qpolya":
        spec = _urn(args, q)
        if spec.m == 0:
            raise UsageError("the inverse law needs m != 0")
        return inverse_qpolya_table(PolyaParams.from_urn(spec, args.n), args.wmax)
    lim = _limit(args, q)
    if dist == "qmult2":
        return q_multinomial_2nd_table(lim, args.n)
    return negative_q_multinomial_2nd_table(lim, args.n, args.wmax)


def _table_meta(args, table) -> dict:
    meta = {"command": args.command, "dist": args.dist, "n": args.n, "q": args.q,
            "backend": "exact" if args.exact else "log"}
    if args.r is not None:
        meta["r"] = list(args.r)
    if args.m is not None or args.dist in FIXED_M:
        meta["m"] = FIXED_M.get(args.dist, args.m)
    meta.update(support_size=len(table), normalization_defect=table.normalization_defect,
                truncated=table.truncated, tail_bound=table.tail_bound, proper=table.proper)
    return meta


def _table_ok(table, tolerance: float) -> bool:
    if not table.proper:
        return True
    allowed = tolerance + (table.tail_bound if table.truncated else 0.0)
    return table.normalization_defect <= allowed


# -- commands ------------------------------------------------------------------


def cmd_pmf(args, out) -> int:
    q = _qbase(args)
    table = _table(args, q)
    tol = args.tolerance if args.tolerance is not None else 1e-10
    k = len(table.support[0]) if table.support else 0
    cols = [f"x{j + 1}" for j in range(k)] + ["probability"]
    if args.exact:
        cols += ["numerator", "denominator"]
    rows = []
    for outcome, p in zip(table.support, table.probs):
        row = {f"x{j + 1}": str(v) for j, v in enumerate(outcome)}
        row.update(_prob_fields(p, args.exact))
        rows.append(row)
    ok = _table_ok(table, tol)
    emit({**_table_meta(args, table), "tolerance": tol, "check": "pass" if ok else "fail"},
         cols, rows, args.format, out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_sample(args, out) -> int:
    if args.dist not in ("qpolya", "qhyper", "neg-qhyper", "inverse-qpolya"):
        raise UsageError("sampling covers the urn laws: qpolya, qhyper, neg-qhyper, inverse-qpolya")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    if args.threads < 1:
        raise UsageError("--threads must be positive")
    q = _qbase(args)
    spec = _urn(args, q)
    table = _table(args, q)
    if args.dist == "inverse-qpolya":
        draws = sample_inverse_qpolya_batch(spec, args.n, args.samples, args.seed, args.threads)
    else:
        draws = sample_qpolya_batch(spec, args.n, args.samples, args.seed, args.threads)
    report = goodness_of_fit(draws, table)
    if args.samples_out:
        with open(args.samples_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{j + 1}" for j in range(spec.k)])
            w.writerows(draws.tolist())
    rows_, counts = np.unique(draws, axis=0, return_counts=True)
    observed = {tuple(int(v) for v in r): int(c) for r, c in zip(rows_, counts)}
    cols = [f"x{j + 1}" for j in range(spec.k)] + ["observed", "frequency", "probability"]
    rows = []
    for outcome, p in zip(table.support, table.probs):
        c = observed.pop(outcome, 0)
        row = {f"x{j + 1}": str(v) for j, v in enumerate(outcome)}
        row.update(observed=str(c), frequency=format_scalar(c / args.samples),
                   probability=format_scalar(p))
        rows.append(row)
    escaped = observed.pop((-1,) * spec.k, 0)
    ok = report.p_value >= args.min_p and (args.tolerance is None
                                           or report.tv_distance <= args.tolerance)
    meta = {**_table_meta(args, table), "samples": args.samples, "seed": args.seed,
            "escaped": escaped, "outside_table": sum(observed.values()),
            **report.as_dict(), "check": "pass" if ok else "fail"}
    emit(meta, cols, rows, args.format, out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_identity_check(args, out) -> int:
    tol = args.tolerance if args.tolerance is not None else 1e-9
    reports = run_finite_suite(args.count, args.seed, tolerance=tol)
    reports += run_inverse_suite(args.inverse_count, args.seed, TruncationPolicy())
    cols = ["identity", "instances", "exact_checked", "max_error", "failures", "result"]
    rows = [{"identity": r.identity, "instances": str(r.instances),
             "exact_checked": str(r.exact_checked), "max_error": format_scalar(r.max_error),
             "failures": str(r.failures), "result": "pass" if r.passed else "fail"}
            for r in reports]
    ok = all(r.passed for r in reports)
    emit({"command": args.command, "seed": args.seed, "tolerance": tol,
          "check": "pass" if ok else "fail"}, cols, rows, args.format, out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_converge(args, out) -> int:
    if args.t_min > args.t_max:
        raise UsageError("--t-min exceeds --t-max")
    # the distances fall far below double resolution, so a rational q is
    # always handled exactly
    args.exact = args.exact or _rational(args.q)
    q = _qbase(args)
    tol = args.tolerance if args.tolerance is not None else 1e-3
    points = convergence_sweep(args.c, range(args.t_min, args.t_max + 1), args.n, args.m, q,
                               law=args.dist, scale=args.scale, wmax=args.wmax, nu=args.nu)
    dists = [p.distance for p in points]
    decreasing = all(a > b for a, b in zip(dists, dists[1:]))
    ok = decreasing and dists[-1] <= tol
    cols = ["t", "counts", "sup_distance"]
    rows = [{"t": str(p.t), "counts": " ".join(map(str, p.counts)),
             "sup_distance": format_scalar(p.distance)} for p in points]
    emit({"command": args.command, "dist": args.dist, "c": list(args.c), "n": args.n,
          "m": args.m, "q": args.q, "scale": args.scale,
          "backend": "exact" if args.exact else "log", "strictly_decreasing": decreasing,
          "tolerance": tol, "check": "pass" if ok else "fail"}, cols, rows, args.format, out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_posterior(args, out) -> int:
    q = _qbase(args)
    if sum(args.x) > args.n:
        raise UsageError("--x adds up to more than --n")
    table = posterior_table(args.r_total, args.n, args.x, q)
    tol = args.tolerance if args.tolerance is not None else 1e-12
    k = len(args.x)
    cols = [f"r{j + 1}" for j in range(k)] + ["probability"]
    if args.exact:
        cols += ["numerator", "denominator"]
    rows = []
    for hyp, p in zip(table.support, table.probs):
        row = {f"r{j + 1}": str(v) for j, v in enumerate(hyp)}
        row.update(_prob_fields(p, args.exact))
        rows.append(row)
    ok = table.normalization_defect <= tol
    emit({"command": args.command, "r_total": args.r_total, "n": args.n, "x": list(args.x),
          "q": args.q, "backend": "exact" if args.exact else "log",
          "normalization_defect": table.normalization_defect, "tolerance": tol,
          "check": "pass" if ok else "fail"}, cols, rows, args.format, out)
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "pmf": cmd_pmf,
    "sample": cmd_sample,
    "identity-check": cmd_identity_check,
    "converge": cmd_converge,
    "posterior": cmd_posterior,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = out or sys.stdout
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except UsageError as exc:
        print(f"qpolya: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QPolyaError, ArithmeticError, ValueError) as exc:
        # parameters that fail validation are usage errors; anything
        # raised while computing is a computation error
        kind = "usage" if _is_parameter_error(exc) else "computation"
        print(f"qpolya: {kind} error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE if kind == "usage" else EXIT_COMPUTE
    out.write(buf.getvalue())
    return code


def _is_parameter_error(exc: Exception) -> bool:
    return isinstance(exc, DomainError) and not isinstance(exc, (InfeasibleError, SupportTooLarge))


if __name__ == "__main__":
    sys.exit(main())
