"""Row sampling with rescaling, Walsh-Hadamard mixing, SRHT and Gaussian sketches."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .series import as_rng
from .toeplitz import OLSSolution, ToeplitzSystem, lstsq


class SampleCount(NamedTuple):
    c: int
    capped: bool
    requested: int


@dataclass(frozen=True)
class SampleSet:
    """``c`` draws with replacement: 0-based row indices and rescale weights.

    A draw of row ``i`` under distribution ``pi`` carries weight
    ``1 / sqrt(c * pi[i])``.
    """

    indices: np.ndarray
    weights: np.ndarray
    source_rows: int

    @property
    def c(self) -> int:
        return self.indices.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("index,weight\n")
            for i, w in zip(self.indices, self.weights):
                fh.write(f"{int(i)},{float(w)!r}\n")


@dataclass(frozen=True)
class SketchConfig:
    epsilon: float = 0.5
    delta: float = 0.1
    c_override: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.c_override is not None and self.c_override < 1:
            raise ValueError("c_override must be positive")


def validate_distribution(pi, atol: float = 1e-8) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.float64).reshape(-1)
    if pi.size == 0 or not np.all(np.isfinite(pi)) or np.any(pi < 0):
        raise ValueError("sampling distribution must be finite and nonnegative")
    total = pi.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"sampling distribution sums to {total!r}, not 1")
    return pi


def sample_from_cdf(cdf: np.ndarray, pi: np.ndarray, c: int, rng) -> SampleSet:
    """Inverse-CDF sampling given a precomputed cumulative sum of ``pi``."""
    u = rng.random(c) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, cdf.size - 1, out=idx)
    # guard against landing on a zero-probability row at the upper edge
    zero = pi[idx] == 0
    if zero.any():
        nonzero = np.flatnonzero(pi)
        idx[zero] = nonzero[np.searchsorted(nonzero, idx[zero], side="left").clip(max=nonzero.size - 1)]
    weights = 1.0 / np.sqrt(c * pi[idx])
    return SampleSet(idx, weights, cdf.size)


def sample_rows(pi, c: int, seed=None) -> SampleSet:
    """Draw ``c`` i.i.d. rows from ``pi`` with replacement."""
    if c < 1:
        raise ValueError(f"c must be positive, got {c}")
    pi = validate_distribution(pi)
    return sample_from_cdf(np.cumsum(pi), pi, c, as_rng(seed))


def apply_sample(source, targets, s: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """Gather and rescale sampled rows of a dense matrix or a ToeplitzSystem.

    ``targets`` may be None for a ToeplitzSystem, whose own targets are used.
    """
    idx = s.indices
    if isinstance(source, ToeplitzSystem):
        rows_total = source.m
    else:
        source = np.asarray(source, dtype=np.float64)
        rows_total = source.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= rows_total):
        raise IndexError(f"sample index out of range for {rows_total} rows")
    w = s.weights
    if isinstance(source, ToeplitzSystem):
        A = source.rows(idx)
        b = source.targets(idx) if targets is None else np.asarray(targets)[idx]
    else:
        A = source[idx]
        b = np.asarray(targets, dtype=np.float64)[idx]
    return A * w[:, None], b * w


def solve_compressed(A_hat, b_hat) -> OLSSolution:
    return lstsq(A_hat, b_hat, "compressed")


# ---------------------------------------------------------------------------
# Walsh-Hadamard
# ---------------------------------------------------------------------------

def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def hadamard_apply(x) -> np.ndarray:
    """Normalized Sylvester-Hadamard transform along axis 0.

    Works on a vector or on every column of a matrix; the first axis must
    have power-of-two length. Each butterfly level scales by 1/sqrt(2).
    """
    x = np.array(x, dtype=np.float64, copy=True)
    n = x.shape[0]
    if not _is_pow2(n):
        raise ValueError(f"length {n} is not a power of two")
    tail = x.shape[1:]
    h = 1
    scale = 1.0 / math.sqrt(2.0)
    while h < n:
        blocks = x.reshape((n // (2 * h), 2, h) + tail)
        a = blocks[:, 0].copy()
        b = blocks[:, 1]
        blocks[:, 0] += b
        blocks[:, 1] = a - b
        x *= scale
        h *= 2
    return x


def _parity(v: np.ndarray) -> np.ndarray:
    return np.bitwise_count(v) & 1


def hadamard_rows(x, rows, block: int | None = None) -> np.ndarray:
    """Selected output rows of ``hadamard_apply(x)`` in ``O(n log block + len(rows) n / block)``.

    Uses ``H_n = H_B kron H_K`` with ``K = block``: transform each length-K
    block, then combine the B block results for each requested row directly.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not _is_pow2(n):
        raise ValueError(f"length {n} is not a power of two")
    rows = np.asarray(rows, dtype=np.int64)
    if block is None:
        block = min(n, next_pow2(max(1, rows.size)))
    if not _is_pow2(block) or block > n:
        raise ValueError("block must be a power of two no larger than n")
    K, B = block, n // block
    tail = x.shape[1:]
    inner = hadamard_apply(x.reshape((B, K) + tail).swapaxes(0, 1).reshape((K, B * int(np.prod(tail, dtype=int)))))
    inner = inner.reshape((K, B) + tail)
    hi, lo = rows // K, rows % K
    signs = 1.0 - 2.0 * _parity(hi[:, None] & np.arange(B, dtype=np.int64)[None, :]).astype(np.float64)
    picked = inner[lo]  # (r, B, ...)
    return np.einsum("rb,rb...->r...", signs, picked) / math.sqrt(B)


def srht_sample_count(n: int, d: int, epsilon: float) -> SampleCount:
    """Row count ``max(48^2 d ln(40nd) ln(100^2 d ln(40nd)), 40 d ln(40nd) / eps)``, capped at n."""
    if not n > d >= 1:
        raise ValueError(f"need n > d >= 1, got n={n}, d={d}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    log_term = math.log(40 * n * d)
    first = 48**2 * d * log_term * math.log(100**2 * d * log_term)
    second = 40 * d * log_term / epsilon
    c = math.ceil(max(first, second))
    if c > n:
        warnings.warn(f"SRHT sample count {c} exceeds n={n}; capping", RuntimeWarning, stacklevel=2)
        return SampleCount(n, True, c)
    return SampleCount(c, False, c)


def srht_solve(A, b, c: int, seed=None) -> OLSSolution:
    """Compressed solve after random signs, Hadamard mixing and uniform sampling.

    Rows are zero-padded to a power of two; only the ``c`` sampled rows of the
    transform are evaluated.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    rows, cols = A.shape
    if rows < cols:
        raise ValueError("SRHT needs rows >= columns")
    if c < cols:
        raise ValueError(f"c={c} is smaller than the column count {cols}")
    rng = as_rng(seed)
    n_pad = next_pow2(rows)
    signs = rng.integers(0, 2, size=rows) * 2.0 - 1.0
    stacked = np.zeros((n_pad, cols + 1))
    stacked[:rows, :cols] = A * signs[:, None]
    stacked[:rows, cols] = b * signs
    picks = rng.integers(0, n_pad, size=c)
    mixed = hadamard_rows(stacked, picks) * math.sqrt(n_pad / c)
    return solve_compressed(mixed[:, :cols], mixed[:, cols])


# ---------------------------------------------------------------------------
# Gaussian sketch
# ---------------------------------------------------------------------------

GAUSSIAN_ROW_CONSTANT = 8.0


def default_gaussian_rows(n: int, constant: float = GAUSSIAN_ROW_CONSTANT) -> int:
    return max(1, math.ceil(constant * math.log(max(n, 2))))


@dataclass(frozen=True)
class GaussianSketch:
    """g x n matrix of i.i.d. N(0, 1) entries, regenerated from ``seed``."""

    rows: int
    seed: int | tuple = 0

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("a Gaussian sketch needs at least one row")

    def matrix(self, n: int) -> np.ndarray:
        return np.random.default_rng(self.seed).standard_normal((self.rows, n))


def gaussian_apply(sketch: GaussianSketch, M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim not in (1, 2):
        raise ValueError("sketch input must be a vector or a matrix")
    return sketch.matrix(M.shape[0]) @ M
