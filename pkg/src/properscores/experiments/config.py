"""Experiment configurations and TOML loading."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _tuple(v):
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class VolatilityConfig:
    """Stochastic volatility model X_t = a X_{t-1} + eps_X, y_t = eps_Y exp(X_t)."""

    a: float = 0.95
    sigma_x: float = 0.5
    sigma_y: float = 1.0
    series_len: int = 600
    replicates: int = 200
    delta_grid: tuple = (0.05, 0.1, 0.2, 0.3, 0.4, 0.45)
    rules: tuple = ("crps", "scrps", "logs")
    seed: int = 20240601

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", _tuple(self.delta_grid))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not abs(self.a) < 1:
            raise ValueError("need |a| < 1 for a stationary volatility")
        if self.sigma_x < 0 or not self.sigma_y > 0:
            raise ValueError("sigma_x must be >= 0 and sigma_y > 0")
        if self.series_len < 1 or self.replicates < 1:
            raise ValueError("series_len and replicates must be positive")
        if any(not 0 < d < self.sigma_y for d in self.delta_grid):
            raise ValueError("every delta must lie in (0, sigma_y)")


@dataclass(frozen=True)
class OutlierConfig:
    count: int = 1
    noise_sd: float = 5.0

    def __post_init__(self):
        if self.count < 1 or not self.noise_sd > 0:
            raise ValueError("outlier count must be >= 1 and noise_sd > 0")


@dataclass(frozen=True)
class SpatialConfig:
    """Matern field on the unit square, scored by leave-one-out kriging.

    With ``outlier`` set, each replicate is scored twice: on the clean field
    and with the outlier noise added (variants ``clean`` and ``outlier``).
    """

    n_obs: int = 100
    kappa: float = 50.0
    sigma: float = 1.0
    nu: float = 3.0
    delta_grid: tuple = (2.0, 5.0, 10.0, 20.0)
    replicates: int = 300
    outlier: Optional[OutlierConfig] = OutlierConfig()
    rules: tuple = ("crps", "rcrps:c=2", "scrps", "rscrps:c=2", "logs")
    seed: int = 20240602

    def __post_init__(self):
        object.__setattr__(self, "delta_grid", _tuple(self.delta_grid))
        object.__setattr__(self, "rules", tuple(self.rules))
        if isinstance(self.outlier, dict):
            object.__setattr__(self, "outlier", OutlierConfig(**self.outlier))
        if min(self.kappa, self.sigma, self.nu) <= 0:
            raise ValueError("Matern parameters must be positive")
        if self.n_obs < 2 or self.replicates < 1:
            raise ValueError("need n_obs >= 2 and replicates >= 1")
        if any(not 0 < d < self.kappa for d in self.delta_grid):
            raise ValueError("every delta must lie in (0, kappa)")


@dataclass(frozen=True)
class NbRegConfig:
    """Synthetic negative binomial regression log(mu) = intercept + X theta."""

    n_obs: int = 500
    k_covariates: int = 10
    intercept: float = 3.5
    theta: Optional[tuple] = None
    linpred_sd: float = 1.25
    s: float = 5.0
    seed: int = 20240603

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("dispersion s must be positive")
        if self.n_obs < 2 or self.k_covariates < 0:
            raise ValueError("need n_obs >= 2 and k_covariates >= 0")
        if self.theta is not None:
            theta = _tuple(self.theta)
            if len(theta) != self.k_covariates:
                raise ValueError(f"theta has {len(theta)} entries, expected {self.k_covariates}")
            object.__setattr__(self, "theta", theta)

    def coefficients(self):
        """theta, or equal slopes giving a linear predictor with sd ``linpred_sd``."""
        if self.theta is not None:
            return self.theta
        if self.k_covariates == 0:
            return ()
        return (self.linpred_sd / self.k_covariates**0.5,) * self.k_covariates


@dataclass(frozen=True)
class SurfaceConfig:
    sigma1: float = 0.1
    sigma2: float = 1.0
    n_grid: int = 41
    ratio_min: float = 0.5
    ratio_max: float = 2.0
    p_min: float = 0.05
    p_max: float = 0.95
    rules: tuple = ("crps", "logs", "scrps")

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigmas must be positive")
        if self.n_grid < 3 or not 0 < self.ratio_min < 1 < self.ratio_max or not 0 < self.p_min < 0.5 < self.p_max < 1:
            raise ValueError("grids must bracket the truth")


@dataclass(frozen=True)
class EntropyConfig:
    volatility: VolatilityConfig = VolatilityConfig(series_len=2000, replicates=1)
    rules: tuple = ("crps", "scrps", "logs")

    def __post_init__(self):
        if isinstance(self.volatility, dict):
            object.__setattr__(self, "volatility", VolatilityConfig(**self.volatility))
        object.__setattr__(self, "rules", tuple(self.rules))


CONFIG_TYPES = {
    "volatility": VolatilityConfig,
    "spatial": SpatialConfig,
    "nbreg": NbRegConfig,
    "surface": SurfaceConfig,
    "entropy": EntropyConfig,
}


def config_from_dict(name, data):
    """Build the config for experiment ``name``, rejecting unknown keys."""
    cls = CONFIG_TYPES[name]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown keys for {name}: {sorted(unknown)}")
    return cls(**data)


def load_config(name, path=None):
    """Read ``[name]`` from a TOML file; the shipped default when ``path`` is None."""
    if name not in CONFIG_TYPES:
        raise KeyError(f"unknown experiment {name!r}")
    if path is None:
        text = resources.files("properscores.configs").joinpath(f"{name}.toml").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    data = tomllib.loads(text)
    return config_from_dict(name, data.get(name, data))


def config_to_dict(cfg):
    return dataclasses.asdict(cfg)
