"""Time series containers, ingestion, transforms and synthetic AR generation."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import (
    DataError,
    DomainError,
    MissingColumnError,
    ParseError,
    SeriesFileNotFound,
)


def as_rng(seed) -> np.random.Generator:
    """Return a PCG64 generator for an int, SeedSequence or existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class TimeSeries:
    """Immutable sequence of finite real observations."""

    values: np.ndarray
    label: str | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if values.size < 1:
            raise DataError("a time series needs at least one observation")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise DataError(f"non-finite value at index {bad[0]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


@dataclass(frozen=True)
class ARModelSpec:
    """Stationary AR(p) model ``Y_t = sum_j phi_j Y_{t-j} + W_t``.

    ``noise_std`` must be positive; ``degenerate=True`` permits a zero noise
    level for tests of the noiseless edge case.
    """

    coefficients: np.ndarray
    noise_std: float = 1.0
    degenerate: bool = field(default=False, repr=False)

    def __post_init__(self):
        phi = np.array(self.coefficients, dtype=np.float64, copy=True).reshape(-1)
        if phi.size < 1:
            raise ValueError("an AR model needs at least one coefficient")
        if phi[-1] == 0.0:
            raise ValueError("the last AR coefficient must be nonzero")
        if self.noise_std < 0 or (self.noise_std == 0 and not self.degenerate):
            raise ValueError(f"noise_std must be positive, got {self.noise_std}")
        radius = companion_spectral_radius(phi)
        if radius >= 1.0:
            raise ValueError(f"model is not stationary (spectral radius {radius:.6g})")
        phi.setflags(write=False)
        object.__setattr__(self, "coefficients", phi)

    @property
    def order(self) -> int:
        return self.coefficients.size

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "coefficients": [float(v) for v in self.coefficients],
            "noise_std": float(self.noise_std),
        }


@dataclass(frozen=True)
class OutlierSpec:
    count: int
    uniform_low: float = -3.0
    uniform_high: float = 3.0
    normal_variance: float = 100.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("outlier count must be nonnegative")
        if self.uniform_low > self.uniform_high:
            raise ValueError("uniform_low must not exceed uniform_high")
        if self.normal_variance <= 0:
            raise ValueError("normal_variance must be positive")

    @classmethod
    def parse(cls, text: str) -> "OutlierSpec":
        """Parse ``k:lo:hi:var`` (trailing fields optional)."""
        parts = text.split(":")
        if not 1 <= len(parts) <= 4:
            raise ValueError(f"expected k:lo:hi:var, got {text!r}")
        count = int(parts[0])
        rest = [float(v) for v in parts[1:]]
        defaults = [-3.0, 3.0, 100.0]
        rest += defaults[len(rest):]
        return cls(count, *rest)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "uniform_low": self.uniform_low,
            "uniform_high": self.uniform_high,
            "normal_variance": self.normal_variance,
        }


def companion_spectral_radius(coefficients) -> float:
    phi = np.asarray(coefficients, dtype=np.float64)
    p = phi.size
    companion = np.zeros((p, p))
    companion[0] = phi
    companion[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def load_csv(path, column: str | int = 0, label: str | None = None) -> TimeSeries:
    """Read one column of a comma-separated file as a series.

    A string ``column`` requires a header row. For an integer column the first
    row is treated as a header only when its cell does not parse as a number.
    Row numbers in errors are 1-based file lines.
    """
    path = Path(path)
    if not path.is_file():
        raise SeriesFileNotFound(f"series file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} contains no rows")

    start = 0
    if isinstance(column, str):
        header = [c.strip() for c in rows[0][1]]
        if column not in header:
            raise MissingColumnError(f"column {column!r} not in header {header}")
        col = header.index(column)
        start = 1
    else:
        col = int(column)
        first = rows[0][1]
        if col < len(first):
            try:
                float(first[col])
            except ValueError:
                start = 1

    values = []
    for lineno, row in rows[start:]:
        if col >= len(row):
            raise MissingColumnError(f"row {lineno} has no column {column!r}")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"cannot parse {cell!r} as a real at row {lineno}", lineno) from None
        if not np.isfinite(v):
            raise ParseError(f"non-finite value {cell!r} at row {lineno}", lineno)
        values.append(v)
    if not values:
        raise DataError(f"{path} has no data rows")
    return TimeSeries(np.array(values), label=label or path.stem)


def save_csv(series: TimeSeries, path, header: str = "value") -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(header + "\n")
        for v in series.values:
            fh.write(f"{float(v)!r}\n")


# Binary layout: little-endian uint64 count, then `count` little-endian float64.
_LEN = struct.Struct("<Q")


def save_binary(series: TimeSeries, path) -> None:
    with Path(path).open("wb") as fh:
        fh.write(_LEN.pack(len(series)))
        fh.write(series.values.astype("<f8").tobytes())


def load_binary(path, label: str | None = None) -> TimeSeries:
    path = Path(path)
    if not path.is_file():
        raise SeriesFileNotFound(f"series file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _LEN.size:
        raise DataError(f"{path} is too short to hold a length prefix")
    (count,) = _LEN.unpack_from(raw)
    payload = raw[_LEN.size:]
    if len(payload) != 8 * count:
        raise DataError(f"{path}: prefix says {count} values, payload has {len(payload) // 8}")
    return TimeSeries(np.frombuffer(payload, dtype="<f8").astype(np.float64), label=label or path.stem)


def load_series(path, column: str | int = 0) -> TimeSeries:
    """Load a ``.bin`` file in the binary layout, anything else as CSV."""
    if Path(path).suffix == ".bin":
        return load_binary(path)
    return load_csv(path, column)


# ---------------------------------------------------------------------------
# Transforms and simulation
# ---------------------------------------------------------------------------

def log_diff_transform(series) -> TimeSeries:
    """Return ``ln(y[i+1]) - ln(y[i])``.

    Raises DomainError with the 1-based index of the first nonpositive value.
    """
    y = _values(series)
    if y.size < 2:
        raise DataError("log-difference needs at least two observations")
    bad = np.flatnonzero(y <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise DomainError(f"nonpositive value {y[bad[0]]!r} at index {i}", i)
    label = series.label if isinstance(series, TimeSeries) else None
    return TimeSeries(np.diff(np.log(y)), label=label)


def partials_to_coefficients(partials: Sequence[float]) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations to AR coefficients."""
    phi = np.zeros(0)
    for kappa in partials:
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
    return phi


def random_stationary_ar(p: int, seed=None, noise_std: float = 1.0) -> ARModelSpec:
    """Draw a random stationary AR(p) model.

    Partial autocorrelations are sampled uniformly on (-0.9, 0.9); any sequence
    with all magnitudes below one maps to a stationary model.
    """
    if p < 1:
        raise ValueError(f"order must be at least 1, got {p}")
    rng = as_rng(seed)
    partials = rng.uniform(-0.9, 0.9, size=p)
    while partials[-1] == 0.0:
        partials[-1] = rng.uniform(-0.9, 0.9)
    return ARModelSpec(partials_to_coefficients(partials), noise_std)


def default_burn_in(p: int) -> int:
    return 10 * p + 1000


def simulate_ar(spec: ARModelSpec, n: int, burn_in: int | None = None, seed=None) -> TimeSeries:
    """Simulate ``n`` observations from a zero initial state, dropping ``burn_in`` draws."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if burn_in is None:
        burn_in = default_burn_in(spec.order)
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = as_rng(seed)
    noise = rng.standard_normal(n + burn_in) * spec.noise_std
    y = lfilter([1.0], np.concatenate([[1.0], -spec.coefficients]), noise)
    return TimeSeries(y[burn_in:], label=f"ar{spec.order}")


def inject_outliers(series, spec: OutlierSpec, seed=None) -> TimeSeries:
    """Add ``U(lo, hi) + N(0, var)`` to ``spec.count`` distinct random positions."""
    y = np.array(_values(series), dtype=np.float64)
    if spec.count > y.size:
        raise ValueError(f"cannot place {spec.count} outliers in {y.size} observations")
    rng = as_rng(seed)
    idx = rng.choice(y.size, size=spec.count, replace=False)
    y[idx] += rng.uniform(spec.uniform_low, spec.uniform_high, size=spec.count)
    y[idx] += rng.normal(0.0, np.sqrt(spec.normal_variance), size=spec.count)
    label = series.label if isinstance(series, TimeSeries) else None
    return TimeSeries(y, label=label)
