"""Repeated Halving spectral approximation and leverage-based AR fitting."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DataError, RankDeficientError
from .series import _values, as_rng
from .sketching import (
    GaussianSketch,
    apply_sample,
    default_gaussian_rows,
    gaussian_apply,
    sample_from_cdf,
    solve_compressed,
)
from .toeplitz import (
    ARFit,
    DEFAULT_MEMORY_CAP,
    PACFResult,
    ToeplitzSystem,
    _check_pbar,
    compressed_bound,
    make_system,
    materialize,
    rank_tolerance,
    residuals,
    select_order,
)

_CHUNK = 1 << 16


@dataclass(frozen=True)
class SpectralApprox:
    """Rescaled sampled rows approximating ``X^T X``.

    ``indices`` are the source rows of ``X`` behind each row of ``rows`` and
    ``weights`` their rescale factors (all ones when no sampling happened).
    ``target_lambda`` is the sandwich factor used when validating.
    """

    rows: np.ndarray
    levels: int
    sample_count: int
    indices: np.ndarray
    weights: np.ndarray
    target_lambda: float = 2.0


def default_base_threshold(c: int, k: int) -> int:
    return max(c, 10 * k * math.ceil(math.log(k + 1)))


@dataclass(frozen=True)
class RHConfig:
    sample_count: int
    base_threshold: int | None = None
    gaussian_rows: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if self.base_threshold is not None and self.base_threshold < self.sample_count:
            raise ValueError("base_threshold must be at least sample_count")
        if self.gaussian_rows is not None and self.gaussian_rows < 1:
            raise ValueError("gaussian_rows must be positive")

    def threshold_for(self, k: int) -> int:
        if self.base_threshold is not None:
            return self.base_threshold
        return default_base_threshold(self.sample_count, k)

    def rows_for(self, n: int) -> int:
        return self.gaussian_rows or default_gaussian_rows(n)


def _triangular_factor(B: np.ndarray):
    if B.shape[0] < B.shape[1]:
        raise RankDeficientError(f"reference matrix {B.shape} has fewer rows than columns")
    Q, R = np.linalg.qr(B, mode="reduced")
    s = linalg.svdvals(R)
    if s[0] == 0.0 or s[-1] <= rank_tolerance(B.shape, s[0]):
        raise RankDeficientError("reference matrix is numerically rank deficient")
    return Q, R


def generalized_leverage(C, B, sketch: GaussianSketch | None = None) -> np.ndarray:
    """Leverage of the rows of ``C`` measured through the column space of ``B``.

    Unsketched: ``|B (B^T B)^{-1} c_i|^2 = |R^{-T} c_i|^2`` with ``B = QR``.
    Sketched: ``|G Q R^{-T} c_i|^2 / g`` for a g-row Gaussian ``G``; the 1/g
    makes it an unbiased estimate of the unsketched score.
    """
    C = np.asarray(C, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if C.ndim != 2 or B.ndim != 2 or C.shape[1] != B.shape[1]:
        raise ValueError(f"column mismatch: C {C.shape}, B {B.shape}")
    Q, R = _triangular_factor(B)
    if sketch is None:
        # rows of C R^{-1} have the same norms as R^{-T} c_i
        proj = linalg.solve_triangular(R, np.eye(R.shape[0]))
        scale = 1.0
    else:
        GQ = gaussian_apply(sketch, Q)
        proj = linalg.solve_triangular(R, GQ.T)
        scale = 1.0 / sketch.rows
    out = np.empty(C.shape[0])
    for start in range(0, C.shape[0], _CHUNK):
        Z = C[start:start + _CHUNK] @ proj
        out[start:start + _CHUNK] = np.einsum("ij,ij->i", Z, Z) * scale
    return out


def augmented_matrix(sys: ToeplitzSystem, cap: int = DEFAULT_MEMORY_CAP) -> np.ndarray:
    """Dense ``[T, b]`` with the target as the last column."""
    A, b = materialize(sys, cap)
    return np.column_stack([A, b])


def repeated_halving(X, config: RHConfig) -> SpectralApprox:
    """Halve uniformly down to the base size, then resample back up.

    Each halving keeps exactly ``floor(rows / 2)`` rows drawn without
    replacement. On the way up, level ``i`` is scored against the
    approximation of level ``i + 1`` with a Gaussian-sketched generalized
    leverage, and ``c`` rows are drawn with replacement and rescaled by
    ``1 / sqrt(c p_i)``.
    """
    if isinstance(X, ToeplitzSystem):
        X = augmented_matrix(X)
    X = np.asarray(X, dtype=np.float64)
    n, k = X.shape
    if n < 1:
        raise ValueError("repeated halving needs at least one row")
    rng = np.random.default_rng(config.seed)
    threshold = config.threshold_for(k)
    g = config.rows_for(n)
    c = config.sample_count

    levels = [None]  # None stands for "all rows of X" and avoids a full copy
    size = n
    while size > threshold:
        pick = np.sort(rng.choice(size, size // 2, replace=False))
        parent = levels[-1]
        levels.append(pick if parent is None else parent[pick])
        size //= 2

    depth = len(levels) - 1
    base = levels[-1]
    if base is None:
        return SpectralApprox(X.copy(), 0, n, np.arange(n), np.ones(n))
    approx = X[base]
    indices, weights = base, np.ones(base.size)
    sketch_seeds = rng.integers(0, 2**63 - 1, size=depth)
    for i in range(depth - 1, -1, -1):
        idx = levels[i]
        Ci = X if idx is None else X[idx]
        sketch = GaussianSketch(g, int(sketch_seeds[i]))
        scores = generalized_leverage(Ci, approx, sketch)
        pi = scores / scores.sum()
        sample = sample_from_cdf(np.cumsum(pi), pi, c, rng)
        approx = Ci[sample.indices] * sample.weights[:, None]
        indices = sample.indices if idx is None else idx[sample.indices]
        weights = sample.weights
    return SpectralApprox(approx, depth, c, indices, weights)


def rh_leverage_scores(sys: ToeplitzSystem, config: RHConfig, return_approx: bool = False):
    """Scores of every row of ``[T, b]`` against its Repeated Halving approximation.

    The final pass is unsketched, so at or below the base size the result is
    the exact leverage of ``[T, b]``.
    """
    X = augmented_matrix(sys)
    approx = repeated_halving(X, config)
    scores = generalized_leverage(X, approx.rows)
    return (scores, approx) if return_approx else scores


def rh_fit(series, p_bar: int, c: int, config: RHConfig | None = None, seed=None) -> ARFit:
    """LSAR lag loop with one upfront Repeated Halving score computation.

    Scores come from the full-width system ``[X_{p_bar}, y]`` and are reused
    for every lag; row ``i`` keeps its index across lags (see ``lsar``), so
    every row stays valid and the distribution needs no restriction. Full
    residuals are still formed at each lag, as in the LSAR loop.
    """
    y = _values(series)
    _check_pbar(y, p_bar)
    if c < p_bar:
        raise DataError(f"c={c} must be at least p_bar={p_bar}")
    rng = as_rng(seed)
    if config is None:
        config = RHConfig(sample_count=c, seed=int(rng.integers(0, 2**63 - 1)))

    t0 = time.perf_counter()
    scores = rh_leverage_scores(make_system(y, p_bar), config)
    pi = scores / scores.sum()
    cdf = np.cumsum(pi)
    upfront = time.perf_counter() - t0

    rows = y.size - p_bar
    coefs, seconds, norms = [], [], []
    for p in range(1, p_bar + 1):
        t0 = time.perf_counter()
        system = make_system(y[: rows + p], p)
        sample = sample_from_cdf(cdf, pi, c, rng)
        coef = solve_compressed(*apply_sample(system, None, sample)).coefficients
        r = residuals(system, coef)
        seconds.append(time.perf_counter() - t0)
        coefs.append(coef)
        norms.append(float(np.linalg.norm(r)))
    pacf = PACFResult(np.array([cf[-1] for cf in coefs]), compressed_bound(c), "rh")
    return ARFit(
        method="rh",
        p_star=select_order(pacf),
        pacf=pacf,
        lag_coefficients=coefs,
        per_lag_seconds=np.array(seconds),
        upfront_seconds=upfront,
        c=c,
        residual_norms=np.array(norms),
        meta={"base_threshold": config.threshold_for(p_bar + 1),
              "gaussian_rows": config.rows_for(rows)},
    )
