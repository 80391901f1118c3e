"""Experiment orchestration: single fits, repeated comparisons and c-sweeps.

Result files are split from timing files. Everything numeric except wall
clock time is a pure function of the inputs and seed and is written to the
result files; measured seconds go to files whose names contain ``timing``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .halving import rh_fit
from .lsar import lag_system, lsar_fit
from .series import TimeSeries, _values, as_rng
from .sketching import srht_solve
from .toeplitz import (
    ARFit,
    PACFResult,
    _check_pbar,
    compressed_bound,
    exact_bound,
    exact_fit,
    materialize,
    relative_error,
    select_order,
)

METHODS = ("exact", "lsar", "rh", "srht")
COMPRESSED = ("lsar", "rh")
DEFAULT_TRIM = 0.05
# default p_bar for each synthetic order in the reference experiments
DEFAULT_PBAR = {5: 50, 10: 50, 20: 50, 50: 100, 100: 200, 150: 250}


def default_pbar(order: int) -> int:
    return DEFAULT_PBAR.get(order, max(50, 2 * order))


def srht_fit(series, p_bar: int, c: int, seed=None) -> ARFit:
    """SRHT solve at every lag, on the same windows as the LSAR loop."""
    y = _values(series)
    _check_pbar(y, p_bar)
    rng = as_rng(seed)
    rows = y.size - p_bar
    coefs, seconds = [], []
    for p in range(1, p_bar + 1):
        t0 = time.perf_counter()
        A, b = materialize(lag_system(y, rows + p, p))
        coefs.append(srht_solve(A, b, c, rng).coefficients)
        seconds.append(time.perf_counter() - t0)
    pacf = PACFResult(np.array([cf[-1] for cf in coefs]), compressed_bound(c), "srht")
    return ARFit("srht", select_order(pacf), pacf, coefs, np.array(seconds), c=c)


def run_fit(series, method: str, p_bar: int, c: int | None = None, seed=None) -> ARFit:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "exact":
        return exact_fit(series, p_bar)
    if c is None:
        raise ValueError(f"method {method!r} needs a sample count c")
    if method == "lsar":
        return lsar_fit(series, p_bar, c, seed)
    if method == "rh":
        return rh_fit(series, p_bar, c, seed=seed)
    return srht_fit(series, p_bar, c, seed)


def pacf_bound(method: str, n: int, p_bar: int, c: int | None) -> float:
    return exact_bound(n, p_bar) if method == "exact" else compressed_bound(c)


@dataclass
class RunReport:
    method: str
    n: int
    p_bar: int
    c: int | None
    seed: int | None
    fit: ARFit
    per_lag_relative_error: np.ndarray | None = None

    @property
    def pacf(self) -> PACFResult:
        return self.fit.pacf

    @property
    def p_star(self) -> int:
        return self.fit.p_star

    @property
    def per_lag_seconds(self) -> np.ndarray:
        return self.fit.per_lag_seconds

    @property
    def cumulative_seconds(self) -> np.ndarray:
        return self.fit.cumulative_seconds

    def result_dict(self) -> dict:
        out = {
            "method": self.method,
            "config": {"n": self.n, "p_bar": self.p_bar, "c": self.c, "seed": self.seed},
            "p_star": self.p_star,
            "coefficients": _floats(self.fit.coefficients),
            "pacf": {
                "lags": [int(h) for h in self.pacf.lags],
                "taus": _floats(self.pacf.taus),
                "bound": float(self.pacf.bound),
            },
            "lag_coefficients": [_floats(cf) for cf in self.fit.lag_coefficients],
        }
        if self.per_lag_relative_error is not None:
            out["per_lag_relative_error"] = _floats(self.per_lag_relative_error)
        return out

    def timing_dict(self) -> dict:
        return {
            "method": self.method,
            "upfront_seconds": float(self.fit.upfront_seconds),
            "per_lag_seconds": _floats(self.per_lag_seconds),
            "cumulative_seconds": _floats(self.cumulative_seconds),
        }


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values).reshape(-1)]


def trimmed_mean(values, fraction: float = DEFAULT_TRIM, axis: int = 0):
    """Mean after cutting ``fraction`` of the samples from each tail."""
    if not 0 <= fraction < 0.5:
        raise ValueError("trim fraction must lie in [0, 0.5)")
    return stats.trim_mean(np.asarray(values, dtype=np.float64), fraction, axis=axis)


def derived_seeds(seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def lag_errors(fit: ARFit, reference: ARFit) -> np.ndarray:
    return np.array([
        relative_error(s, e) for s, e in zip(fit.lag_coefficients, reference.lag_coefficients)
    ])


@dataclass
class Comparison:
    n: int
    p_bar: int
    c: int
    reps: int
    trim: float
    seed: int
    exact: ARFit
    runs: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def trimmed_errors(self, method: str) -> np.ndarray:
        return trimmed_mean(self.errors[method], self.trim, axis=0)

    def mean_cumulative_seconds(self, method: str) -> np.ndarray:
        if method == "exact":
            return self.exact.cumulative_seconds
        return np.mean([f.cumulative_seconds for f in self.runs[method]], axis=0)

    def result_dict(self) -> dict:
        out = {
            "config": {"n": self.n, "p_bar": self.p_bar, "c": self.c, "reps": self.reps,
                       "trim": self.trim, "seed": self.seed},
            "exact": {"p_star": self.exact.p_star, "taus": _floats(self.exact.pacf.taus),
                      "bound": float(self.exact.pacf.bound)},
            "methods": {},
        }
        for method, fits in self.runs.items():
            out["methods"][method] = {
                "p_star": [f.p_star for f in fits],
                "trimmed_error": _floats(self.trimmed_errors(method)),
                "bound": float(fits[0].pacf.bound),
            }
        return out

    def timing_dict(self) -> dict:
        out = {"exact": _floats(self.exact.cumulative_seconds)}
        for method, fits in self.runs.items():
            out[method] = {
                "upfront_seconds": _floats([f.upfront_seconds for f in fits]),
                "mean_cumulative_seconds": _floats(self.mean_cumulative_seconds(method)),
            }
        return out


def compare(series, p_bar: int, c: int, reps: int, seed: int = 0,
            trim: float = DEFAULT_TRIM, methods=COMPRESSED, exact: ARFit | None = None) -> Comparison:
    """Exact fit once, each compressed method ``reps`` times on derived seeds.

    Errors are per lag and per repetition; trimming is applied across
    repetitions at each lag. Runs are serialized so timings do not interfere.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    trimmed_mean([0.0], trim)  # validates the fraction early
    y = _values(series)
    if exact is None:
        exact = exact_fit(y, p_bar)
    comp = Comparison(y.size, p_bar, c, reps, trim, seed, exact)
    for k, method in enumerate(methods):
        seeds = derived_seeds(seed * 1000 + k, reps)
        fits = [run_fit(y, method, p_bar, c, s) for s in seeds]
        comp.runs[method] = fits
        comp.errors[method] = np.array([lag_errors(f, exact) for f in fits])
    return comp


@dataclass(frozen=True)
class SweepRow:
    method: str
    c: int
    max_error: float
    max_seconds: float


def sweep_c(series, c_list, p_bar: int, seed: int = 0, reps: int = 5,
            trim: float = DEFAULT_TRIM, methods=COMPRESSED) -> list[SweepRow]:
    """Max-over-lags trimmed error and run time for each ``c``.

    Time is the final cumulative value (the maximum of the cumulative curve),
    taken as the median over repetitions.
    """
    c_list = list(c_list)
    if not c_list:
        raise ValueError("c_list must not be empty")
    y = _values(series)
    exact = exact_fit(y, p_bar)
    rows = []
    for c in c_list:
        comp = compare(y, p_bar, c, reps, seed, trim, methods, exact=exact)
        for method in methods:
            err = float(np.max(comp.trimmed_errors(method)))
            secs = float(np.median([f.cumulative_seconds[-1] for f in comp.runs[method]]))
            rows.append(SweepRow(method, int(c), err, secs))
    return rows


def real_default_c(n: int) -> int:
    return math.ceil(0.01 * n)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_pacf_plot_csv(path, pacf: PACFResult) -> None:
    write_csv(path, ["lag", "tau", "upper", "lower"],
              [(int(h), t, pacf.bound, -pacf.bound) for h, t in zip(pacf.lags, pacf.taus)])


def write_comparison(outdir, comp: Comparison) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    methods = list(comp.runs)
    paths = {
        "report": outdir / "compare.json",
        "errors": outdir / "errors.csv",
        "timing": outdir / "timing.csv",
        "timing_report": outdir / "compare.timing.json",
    }
    write_json(paths["report"], comp.result_dict())
    trimmed = {m: comp.trimmed_errors(m) for m in methods}
    write_csv(paths["errors"], ["lag", *methods],
              [(h, *(trimmed[m][h - 1] for m in methods)) for h in range(1, comp.p_bar + 1)])
    cum = {m: comp.mean_cumulative_seconds(m) for m in ["exact", *methods]}
    write_csv(paths["timing"], ["lag", "exact", *methods],
              [(h, *(cum[m][h - 1] for m in ["exact", *methods])) for h in range(1, comp.p_bar + 1)])
    write_json(paths["timing_report"], comp.timing_dict())
    for m in ["exact", *methods]:
        pacf = comp.exact.pacf if m == "exact" else comp.runs[m][0].pacf
        paths[f"pacf_{m}"] = outdir / f"pacf_{m}.csv"
        write_pacf_plot_csv(paths[f"pacf_{m}"], pacf)
    return paths


def write_sweep(outdir, rows: list[SweepRow]) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"errors": outdir / "sweep.csv", "timing": outdir / "sweep_timing.csv"}
    write_csv(paths["errors"], ["method", "c", "max_error"], [(r.method, r.c, r.max_error) for r in rows])
    write_csv(paths["timing"], ["method", "c", "max_seconds"], [(r.method, r.c, r.max_seconds) for r in rows])
    return paths


def series_sidecar(series: TimeSeries, spec=None, outliers=None, seed=None) -> dict:
    return {
        "n": len(series),
        "label": series.label,
        "seed": seed,
        "model": spec.to_dict() if spec is not None else None,
        "outliers": outliers.to_dict() if outliers is not None else None,
    }
