"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data or I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from numpy.linalg import LinAlgError

from . import bench
from .errors import DataError, NumericalError, TolsError, UsageError
from .series import (
    OutlierSpec,
    inject_outliers,
    load_csv,
    load_series,
    log_diff_transform,
    random_stationary_ar,
    save_binary,
    save_csv,
    simulate_ar,
)

log = logging.getLogger("tolsketch")


def _column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _c_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("sample counts must be positive")
    return values


def _outliers(text: str) -> OutlierSpec:
    try:
        return OutlierSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _timing_path(path: Path) -> Path:
    return path.with_name(path.stem + ".timing.json")


def cmd_simulate(args) -> int:
    spec = random_stationary_ar(args.order, seed=args.seed)
    series = simulate_ar(spec, args.n, args.burn_in, seed=[args.seed, 1])
    if args.outliers is not None:
        series = inject_outliers(series, args.outliers, seed=[args.seed, 2])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        series_path = out.with_suffix(".csv")
        save_csv(series, series_path)
    else:
        series_path = out.with_suffix(".bin")
        save_binary(series, series_path)
    sidecar = bench.series_sidecar(series, spec, args.outliers, args.seed)
    sidecar["series_file"] = series_path.name
    bench.write_json(out.with_suffix(".json"), sidecar)
    log.info("wrote %s", series_path)
    return 0


def _require_c(args, method: str) -> None:
    if method != "exact" and args.c is None:
        raise UsageError(f"--c is required for method {method!r}")


def cmd_fit(args) -> int:
    _require_c(args, args.method)
    series = load_series(args.series, args.column)
    fit = bench.run_fit(series, args.method, args.pbar, args.c, args.seed)
    report = bench.RunReport(args.method, len(series), args.pbar, args.c, args.seed, fit)
    if args.reference_error and args.method != "exact":
        report.per_lag_relative_error = bench.lag_errors(fit, bench.exact_fit(series, args.pbar))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.write_json(out, report.result_dict())
    bench.write_json(_timing_path(out), report.timing_dict())
    print(f"{args.method}: p* = {fit.p_star}")
    return 0


def cmd_pacf(args) -> int:
    _require_c(args, args.method)
    series = load_series(args.series, args.column)
    fit = bench.run_fit(series, args.method, args.pbar, args.c, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench.write_pacf_plot_csv(out, fit.pacf)
    return 0


def _run_compare(series, args, c: int) -> int:
    comp = bench.compare(series, args.pbar, c, args.reps, args.seed, args.trim)
    paths = bench.write_comparison(args.out, comp)
    for method, fits in comp.runs.items():
        print(f"{method}: p* per rep = {[f.p_star for f in fits]}")
    print(f"exact: p* = {comp.exact.p_star}; outputs in {paths['report'].parent}")
    return 0


def cmd_compare(args) -> int:
    if args.c is None:
        raise UsageError("--c is required")
    return _run_compare(load_series(args.series, args.column), args, args.c)


def cmd_sweep(args) -> int:
    series = load_series(args.series, args.column)
    rows = bench.sweep_c(series, args.c, args.pbar, args.seed, args.reps, args.trim)
    bench.write_sweep(args.out, rows)
    return 0


def cmd_real(args) -> int:
    series = log_diff_transform(load_csv(args.csv, args.column))
    c = args.c if args.c is not None else bench.real_default_c(len(series))
    return _run_compare(series, args, c)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tolsketch",
        description="Fit AR models to long series with sketched Toeplitz least squares.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, series=True, method=False, c_required=False):
        if series:
            p.add_argument("series", help="series file (.bin binary layout, otherwise CSV)")
            p.add_argument("--column", type=_column, default=0)
        if method:
            p.add_argument("--method", choices=bench.METHODS, required=True)
        p.add_argument("--pbar", type=int, required=True, help="largest lag to fit")
        p.add_argument("--c", type=int, required=c_required, help="rows to sample")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="simulate a random stationary AR(p) series")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outliers", type=_outliers, default=None, metavar="k:lo:hi:var")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit lags 1..pbar with one method")
    common(p, method=True)
    p.add_argument("--reference-error", action="store_true",
                   help="also solve exactly and report per-lag relative error")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("pacf", help="write PACF plot data with confidence bounds")
    common(p, method=True)
    p.set_defaults(func=cmd_pacf)

    p = sub.add_parser("compare", help="exact once, LSAR and RH repeatedly")
    common(p)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--trim", type=float, default=bench.DEFAULT_TRIM)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="error and time as the sample count varies")
    p.add_argument("series")
    p.add_argument("--column", type=_column, default=0)
    p.add_argument("--c", type=_c_list, required=True, help="comma-separated sample counts")
    p.add_argument("--pbar", type=int, required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--trim", type=float, default=bench.DEFAULT_TRIM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("real", help="log-difference a CSV column, then compare")
    p.add_argument("csv")
    p.add_argument("--column", type=_column, required=True)
    p.add_argument("--pbar", type=int, default=100)
    p.add_argument("--c", type=int, default=None, help="default: ceil(0.01 n)")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--trim", type=float, default=bench.DEFAULT_TRIM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_real)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (DataError, NumericalError, LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", NumericalError.exit_code)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (TolsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
