"""Desk-scale model-selection studies and figure data."""

from .config import (
    EntropyConfig,
    NbRegConfig,
    OutlierConfig,
    SpatialConfig,
    SurfaceConfig,
    VolatilityConfig,
    load_config,
)
from .entropy import entropy_decomposition_trace
from .nbreg import NegativeBinomialRegressor, fit_negbin, run_nbreg
from .selection import SelectionCurve, wilson_interval
from .spatial import LeaveOneOutKriging, loo_kriging, matern_cov, run_spatial
from .surfaces import expected_score_surfaces
from .volatility import run_volatility

__all__ = [
    "EntropyConfig", "NbRegConfig", "OutlierConfig", "SpatialConfig", "SurfaceConfig", "VolatilityConfig",
    "load_config", "entropy_decomposition_trace", "NegativeBinomialRegressor", "fit_negbin", "run_nbreg",
    "SelectionCurve", "wilson_interval", "LeaveOneOutKriging", "loo_kriging", "matern_cov", "run_spatial",
    "expected_score_surfaces", "run_volatility",
]
