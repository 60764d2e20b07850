"""Stochastic volatility study: does the average score pick the true sigma_Y?"""

from __future__ import annotations

import numpy as np

from ..exceptions import ExperimentError
from ..numerics import RngStream
from ..scores import parse_rule
from .config import VolatilityConfig
from .selection import SelectionCurve, true_model_wins


def simulate_volatility(cfg: VolatilityConfig, rng: RngStream):
    """One series (x, y) of length ``series_len``; X starts from its stationary law."""
    n = cfg.series_len
    z = rng.normal(n + 1)
    eps_y = rng.normal(n, 0.0, cfg.sigma_y)
    x = np.empty(n + 1)
    x[0] = z[0] * cfg.sigma_x / np.sqrt(1 - cfg.a**2)
    for t in range(1, n + 1):
        x[t] = cfg.a * x[t - 1] + cfg.sigma_x * z[t]
    x = x[1:]
    return x, eps_y * np.exp(x)


def run_volatility(cfg: VolatilityConfig = VolatilityConfig()) -> SelectionCurve:
    """Selection frequencies of sigma_hat = sigma_Y against sigma_Y +/- delta.

    The predictive law for y_t given X_t is N(0, sigma_hat^2 exp(2 X_t)).
    Each replicate draws one series from ``RngStream(seed, replicate)`` and
    reuses it for every delta.
    """
    rules = [parse_rule(r) for r in cfg.rules]
    deltas = np.asarray(cfg.delta_grid)
    wins = np.zeros((len(rules), deltas.size), dtype=int)
    for rep in range(cfg.replicates):
        try:
            x, y = simulate_volatility(cfg, RngStream(cfg.seed, rep))
            scale = np.exp(x)
            for i, rule in enumerate(rules):
                true_mean = rule.gaussian(0.0, cfg.sigma_y * scale, y).mean()
                for j, d in enumerate(deltas):
                    means = [true_mean,
                             rule.gaussian(0.0, (cfg.sigma_y + d) * scale, y).mean(),
                             rule.gaussian(0.0, (cfg.sigma_y - d) * scale, y).mean()]
                    wins[i, j] += bool(true_model_wins(means))
        except Exception as exc:
            raise ExperimentError(rep, exc) from exc
    curve = SelectionCurve()
    for i, rule in enumerate(rules):
        for j, d in enumerate(deltas):
            curve.add(rule.label, d, wins[i, j], cfg.replicates)
    return curve
