"""Lagged (Toeplitz) regression systems, exact OLS, leverage and PACF."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from .errors import CapExceededError, DataError, RankDeficientError
from .series import _values

EPS = np.finfo(np.float64).eps
DEFAULT_MEMORY_CAP = 200_000_000
Z95 = 1.96


@dataclass(frozen=True)
class ToeplitzSystem:
    """Implicit view of the AR(p) regression ``X phi ~ y`` on a series.

    Row ``i`` (0-based) is ``(y[i+p-1], ..., y[i])`` and its target is
    ``y[i+p]``, so there are ``m = n - p`` rows. Nothing of size ``m * p`` is
    stored; ``values`` is shared with the source series.
    """

    values: np.ndarray
    p: int

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def m(self) -> int:
        return self.values.size - self.p

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.p

    def column(self, j: int) -> np.ndarray:
        """Column ``j`` (1-based lag) as a view: ``y[p-j : p-j+m]``."""
        start = self.p - j
        return self.values[start:start + self.m]

    @property
    def target(self) -> np.ndarray:
        return self.values[self.p:]

    def rows(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp)
        offsets = np.arange(self.p - 1, -1, -1, dtype=np.intp)
        return self.values[idx[:, None] + offsets[None, :]]

    def targets(self, idx) -> np.ndarray:
        return self.values[np.asarray(idx, dtype=np.intp) + self.p]

    def matvec(self, phi) -> np.ndarray:
        out = np.zeros(self.m)
        for j, coef in enumerate(phi, start=1):
            out += coef * self.column(j)
        return out

    def rmatvec(self, r) -> np.ndarray:
        return np.array([self.column(j) @ r for j in range(1, self.p + 1)])


def make_system(series, p: int) -> ToeplitzSystem:
    y = _values(series)
    if p < 1:
        raise ValueError(f"lag order must be positive, got {p}")
    if p >= y.size:
        raise DataError(f"lag order {p} needs more than {y.size} observations")
    return ToeplitzSystem(y, int(p))


def materialize(sys: ToeplitzSystem, cap: int = DEFAULT_MEMORY_CAP) -> tuple[np.ndarray, np.ndarray]:
    required = sys.m * sys.p
    if required > cap:
        raise CapExceededError(required, cap)
    window = sliding_window_view(sys.values, sys.p)[: sys.m, ::-1]
    return np.ascontiguousarray(window), sys.target.copy()


def residuals(sys: ToeplitzSystem, phi) -> np.ndarray:
    """Full-length residual ``X phi - y`` computed column by column."""
    phi = np.asarray(phi, dtype=np.float64).reshape(-1)
    if phi.size != sys.p:
        raise ValueError(f"expected {sys.p} coefficients, got {phi.size}")
    return sys.matvec(phi) - sys.target


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OLSSolution:
    coefficients: np.ndarray
    residuals: np.ndarray
    residual_norm: float
    method: str
    rank: int


def rank_tolerance(shape, largest_singular: float) -> float:
    return max(shape) * EPS * largest_singular


def _min_norm(A, b):
    U, s, Vt = linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1]), 0
    keep = s > rank_tolerance(A.shape, s[0])
    coef = Vt[keep].T @ ((U[:, keep].T @ b) / s[keep])
    return coef, int(keep.sum())


def _triangular(blocks) -> np.ndarray:
    """R factor of the column-stacked blocks via in-place LAPACK geqrf."""
    M = np.asfortranarray(np.column_stack(blocks))
    qr, _, _, info = linalg.lapack.dgeqrf(M, overwrite_a=1)
    if info != 0:
        raise RuntimeError(f"dgeqrf failed with info={info}")
    k = min(qr.shape)
    return np.triu(qr[:k])


def lstsq(A, b, method: str = "exact-qr") -> OLSSolution:
    """Least squares with a QR fast path and a minimum-norm SVD fallback.

    QR is applied to ``[A, b]`` so only the triangular factor is formed. The
    fallback triggers when ``A`` has fewer rows than columns or its smallest
    singular value is within ``max(shape) * eps * s_max`` of zero.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("least squares needs a nonempty 2-D matrix")
    rows, cols = A.shape
    if b.size != rows:
        raise ValueError(f"target has {b.size} entries, matrix has {rows} rows")

    coef = None
    if rows >= cols:
        R = _triangular([A, b])
        Rx = R[:cols, :cols]
        s = linalg.svdvals(Rx)
        if s[0] > 0 and s[-1] > rank_tolerance(A.shape, s[0]):
            coef = linalg.solve_triangular(Rx, R[:cols, cols])
            rank = cols
    if coef is None:
        coef, rank = _min_norm(A, b)
        if method == "exact-qr":
            method = "exact-svd"
    r = A @ coef - b
    return OLSSolution(coef, r, float(np.linalg.norm(r)), method, rank)


def solve_exact(A, b) -> OLSSolution:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 2 and 0 < A.shape[0] < A.shape[1]:
        raise ValueError(f"exact solve needs rows >= columns, got shape {A.shape}")
    return lstsq(A, b, "exact-qr")


def exact_leverage_scores(A) -> np.ndarray:
    """Squared row norms of the thin orthogonal factor of ``A``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError(f"leverage needs a tall matrix, got shape {np.shape(A)}")
    Q, R = np.linalg.qr(A, mode="reduced")
    s = linalg.svdvals(R)
    if s[0] == 0.0 or s[-1] <= rank_tolerance(A.shape, s[0]):
        raise RankDeficientError("matrix is numerically rank deficient")
    return np.einsum("ij,ij->i", Q, Q)


# ---------------------------------------------------------------------------
# PACF, order selection and errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PACFResult:
    taus: np.ndarray
    bound: float
    method: str

    @property
    def lags(self) -> np.ndarray:
        return np.arange(1, self.taus.size + 1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("lag,tau,bound\n")
            for h, tau in zip(self.lags, self.taus):
                fh.write(f"{h},{float(tau)!r},{self.bound!r}\n")


def compressed_bound(c: int) -> float:
    return Z95 / np.sqrt(c)


def exact_bound(n: int, p_bar: int) -> float:
    return Z95 / np.sqrt(n - p_bar)


def select_order(pacf: PACFResult) -> int:
    """Largest lag whose |tau| reaches the bound (inclusive), or 0."""
    if pacf.taus.size == 0:
        raise ValueError("empty PACF")
    hits = np.flatnonzero(np.abs(pacf.taus) >= pacf.bound)
    return int(hits[-1]) + 1 if hits.size else 0


def relative_error(phi_s, phi) -> float:
    """Percentage error ``100 * |phi_s - phi| / |phi|``."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if phi_s.shape != phi.shape:
        raise ValueError(f"shape mismatch {phi_s.shape} vs {phi.shape}")
    ref = np.linalg.norm(phi)
    if ref == 0.0:
        raise ValueError("reference coefficients have zero norm")
    return float(100.0 * np.linalg.norm(phi_s - phi) / ref)


@dataclass
class ARFit:
    """Result of a lag sweep 1..p_bar by one method.

    ``lag_coefficients[h-1]`` holds the estimate at lag ``h``;
    ``upfront_seconds`` is time spent before the first lag (RH leverage).
    """

    method: str
    p_star: int
    pacf: PACFResult
    lag_coefficients: list
    per_lag_seconds: np.ndarray
    upfront_seconds: float = 0.0
    c: int | None = None
    residual_norms: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def coefficients(self) -> np.ndarray:
        if self.p_star == 0:
            return np.zeros(0)
        return self.lag_coefficients[self.p_star - 1]

    @property
    def p_bar(self) -> int:
        return len(self.lag_coefficients)

    @property
    def cumulative_seconds(self) -> np.ndarray:
        return self.upfront_seconds + np.cumsum(self.per_lag_seconds)


def _check_pbar(y: np.ndarray, p_bar: int) -> None:
    if p_bar < 1:
        raise ValueError(f"p_bar must be positive, got {p_bar}")
    if y.size <= p_bar + 1:
        raise DataError(f"series of length {y.size} is too short for p_bar={p_bar}")


def exact_fit(series, p_bar: int, cap: int = DEFAULT_MEMORY_CAP) -> ARFit:
    """Solve the full regression at every lag 1..p_bar."""
    y = _values(series)
    _check_pbar(y, p_bar)
    coefs, seconds, norms = [], [], []
    for h in range(1, p_bar + 1):
        t0 = time.perf_counter()
        A, b = materialize(make_system(y, h), cap)
        sol = solve_exact(A, b)
        del A, b
        seconds.append(time.perf_counter() - t0)
        coefs.append(sol.coefficients)
        norms.append(sol.residual_norm)
    taus = np.array([c[-1] for c in coefs])
    pacf = PACFResult(taus, exact_bound(y.size, p_bar), "exact")
    return ARFit(
        method="exact",
        p_star=select_order(pacf),
        pacf=pacf,
        lag_coefficients=coefs,
        per_lag_seconds=np.array(seconds),
        residual_norms=np.array(norms),
    )


def pacf_exact(series, p_bar: int) -> PACFResult:
    return exact_fit(series, p_bar).pacf

