"""Sketched Toeplitz least squares for fitting autoregressive models to long series."""

from .halving import RHConfig, SpectralApprox, generalized_leverage, repeated_halving, rh_fit
from .lsar import LeverageState, lsar_fit
from .series import (
    ARModelSpec,
    OutlierSpec,
    TimeSeries,
    inject_outliers,
    load_csv,
    log_diff_transform,
    random_stationary_ar,
    simulate_ar,
)
from .sketching import SampleSet, hadamard_apply, sample_rows, srht_solve
from .toeplitz import (
    ARFit,
    PACFResult,
    ToeplitzSystem,
    exact_fit,
    exact_leverage_scores,
    make_system,
    pacf_exact,
    select_order,
    solve_exact,
)

__version__ = "0.1.0"
