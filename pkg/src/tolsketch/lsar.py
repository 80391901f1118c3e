"""Lag-recursive approximate leverage scores and the LSAR order-selection loop.

At lag ``p`` the regression uses the window ``y[:m]`` with ``m = n - p_bar + p``,
so every lag has the same ``n - p_bar`` rows and row ``i`` at lag ``p`` is row
``i`` at lag ``p - 1`` with that row's target prepended. That alignment is what
makes the score recursion

    score_p(i) = score_{p-1}(i) + r_{p-1}(i)^2 / |r_{p-1}|^2

an exact leverage update when ``r_{p-1}`` is the exact residual.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateResidualError
from .series import _values, as_rng
from .sketching import SampleCount, apply_sample, sample_from_cdf, solve_compressed
from .toeplitz import (
    ARFit,
    PACFResult,
    ToeplitzSystem,
    _check_pbar,
    compressed_bound,
    make_system,
    materialize,
    residuals,
    select_order,
    solve_exact,
)


@dataclass
class LeverageState:
    """Recursion state after the compressed solve at lag ``p``.

    ``m`` is the window length, so ``scores`` and ``residuals`` have
    ``m - p`` entries.
    """

    p: int
    m: int
    scores: np.ndarray
    residuals: np.ndarray
    coefficients: np.ndarray

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residuals))


def lag_system(y: np.ndarray, m: int, p: int) -> ToeplitzSystem:
    return make_system(y[:m], p)


def init_leverage_p1(window) -> np.ndarray:
    """Exact leverage of a single-column matrix: ``y_i^2 / sum y_t^2``."""
    w = np.asarray(window, dtype=np.float64)
    sq = w * w
    total = sq.sum()
    if total == 0.0:
        raise DegenerateResidualError("all-zero window has no leverage distribution")
    return sq / total


def _add_residual_term(scores: np.ndarray, r: np.ndarray) -> np.ndarray:
    norm2 = float(r @ r)
    if norm2 == 0.0:
        raise DegenerateResidualError(
            "zero residual norm; the series is noiseless and the sampling law is undefined"
        )
    return scores + (r * r) / norm2


def leverage_to_distribution(scores) -> np.ndarray:
    """Normalize by the empirical score sum so the result is a distribution."""
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(scores < 0):
        raise ValueError("leverage scores must be nonnegative")
    total = scores.sum()
    if not total > 0:
        raise ValueError("leverage scores sum to zero")
    return scores / total


def lsar_c(p: int, epsilon: float, delta: float, beta: float = 1.0,
           constant: float = 1.0, rows: int | None = None) -> SampleCount:
    """``ceil(K p ln(p / delta) / (beta eps^2))``, optionally capped at ``rows``."""
    if p < 1:
        raise ValueError("p must be positive")
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    c = math.ceil(constant * p * math.log(p / delta) / (beta * epsilon**2))
    if rows is not None and c > rows:
        warnings.warn(f"sample count {c} exceeds {rows} rows; capping", RuntimeWarning, stacklevel=2)
        return SampleCount(rows, True, c)
    return SampleCount(max(c, 1), False, c)


def _solve_lag(system: ToeplitzSystem, scores: np.ndarray, c: int, rng, oracle: bool):
    if oracle:
        coef = solve_exact(*materialize(system)).coefficients
    else:
        pi = leverage_to_distribution(scores)
        sample = sample_from_cdf(np.cumsum(pi), pi, c, rng)
        coef = solve_compressed(*apply_sample(system, None, sample)).coefficients
    return coef, residuals(system, coef)


def initial_state(series, p_bar: int, c: int, seed=None, oracle: bool = False) -> LeverageState:
    """Lag-1 state: exact scores, one sampled solve, full residuals."""
    y = _values(series)
    m = y.size - p_bar + 1
    system = lag_system(y, m, 1)
    scores = init_leverage_p1(system.column(1))
    coef, r = _solve_lag(system, scores, c, as_rng(seed), oracle)
    return LeverageState(1, m, scores, r, coef)


def quasi_leverage_p2(state: LeverageState) -> np.ndarray:
    if state.p != 1:
        raise ValueError("quasi-approximate scores start from the lag-1 state")
    return _add_residual_term(state.scores, state.residuals)


def update_leverage(state: LeverageState, series, c: int, seed=None,
                    oracle: bool = False) -> LeverageState:
    """Advance the recursion one lag and run the sampled solve there.

    With ``oracle=True`` the exact lag solution replaces the compressed one,
    which turns the scores into exact leverage scores.
    """
    if state.p == 1:
        scores = quasi_leverage_p2(state)
    else:
        scores = _add_residual_term(state.scores, state.residuals)
    p, m = state.p + 1, state.m + 1
    system = lag_system(_values(series), m, p)
    coef, r = _solve_lag(system, scores, c, as_rng(seed), oracle)
    return LeverageState(p, m, scores, r, coef)


def lsar_fit(series, p_bar: int, c: int, seed=None, oracle: bool = False,
             keep_states: bool = False) -> ARFit:
    """Run the LSAR lag loop for lags 1..p_bar and select the order.

    The PACF at lag ``p`` is the last compressed coefficient there, and the
    order is the largest lag with ``|tau| >= 1.96 / sqrt(c)``.
    """
    y = _values(series)
    _check_pbar(y, p_bar)
    if c < p_bar:
        raise DataError(f"c={c} must be at least p_bar={p_bar}")
    rng = as_rng(seed)
    coefs, seconds, norms, states = [], [], [], []
    state = None
    for p in range(1, p_bar + 1):
        t0 = time.perf_counter()
        if state is None:
            state = initial_state(y, p_bar, c, rng, oracle)
        else:
            state = update_leverage(state, y, c, rng, oracle)
        seconds.append(time.perf_counter() - t0)
        coefs.append(state.coefficients)
        norms.append(state.residual_norm)
        if keep_states:
            states.append(state)
    pacf = PACFResult(np.array([cf[-1] for cf in coefs]), compressed_bound(c), "lsar")
    fit = ARFit(
        method="lsar",
        p_star=select_order(pacf),
        pacf=pacf,
        lag_coefficients=coefs,
        per_lag_seconds=np.array(seconds),
        c=c,
        residual_norms=np.array(norms),
    )
    if keep_states:
        fit.meta["states"] = states
    return fit
