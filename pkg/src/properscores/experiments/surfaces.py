"""Expected average score surfaces for two mean-zero Gaussian observations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..numerics import std_normal_ppf
from ..scores import parse_rule
from .config import SurfaceConfig


@dataclass(frozen=True)
class Surfaces:
    """Surfaces indexed [i, j] = (first coordinate grid[i], second grid[j]).

    ``sigma`` surfaces vary sigma_hat_k = ratio * sigma_k with mu_hat_k = 0;
    ``mu`` surfaces vary mu_hat_k = sigma_k Phi^{-1}(p_k) with sigma_hat_k = sigma_k.
    """

    ratio_grid: np.ndarray
    p_grid: np.ndarray
    sigma: Dict[str, np.ndarray]
    mu: Dict[str, np.ndarray]


def expected_average(rule, mu_hat1, sigma_hat1, mu_hat2, sigma_hat2, sigma1, sigma2):
    """1/2 E S(P_1, Y_1) + 1/2 E S(P_2, Y_2) with Y_k ~ N(0, sigma_k^2)."""
    r = parse_rule(rule)
    return 0.5 * r.expected_gaussian(mu_hat1, sigma_hat1, 0.0, sigma1) + 0.5 * r.expected_gaussian(
        mu_hat2, sigma_hat2, 0.0, sigma2)


def expected_score_surfaces(cfg: SurfaceConfig = SurfaceConfig()) -> Surfaces:
    half = (cfg.n_grid - 1) / 2
    j = np.arange(cfg.n_grid) - half
    # geometric in the ratio, linear in p; both centred exactly on the truth
    ratio = np.where(j < 0, cfg.ratio_min ** (-j / half), cfg.ratio_max ** (j / half))
    p = np.where(j < 0, 0.5 + (0.5 - cfg.p_min) * j / half, 0.5 + (cfg.p_max - 0.5) * j / half)
    R1, R2 = np.meshgrid(ratio, ratio, indexing="ij")
    P1, P2 = np.meshgrid(p, p, indexing="ij")
    s1, s2 = cfg.sigma1, cfg.sigma2
    sig, mu = {}, {}
    for rule in cfg.rules:
        label = parse_rule(rule).label
        sig[label] = expected_average(rule, 0.0, R1 * s1, 0.0, R2 * s2, s1, s2)
        mu[label] = expected_average(rule, s1 * std_normal_ppf(P1), s1, s2 * std_normal_ppf(P2), s2, s1, s2)
    return Surfaces(ratio, p, sig, mu)


def asymmetry(surface):
    """max |D - D^T| / max |D| for the drop D = max(surface) - surface."""
    d = np.max(surface) - surface
    return float(np.max(np.abs(d - d.T)) / np.max(np.abs(d)))


def gap_ratio(rule, sigma1=0.1, sigma2=1.0, factor=2.0):
    """Drop from the optimum when sigma_hat_2 is off by ``factor``, over the drop
    when sigma_hat_1 is off by the same factor."""
    best = expected_average(rule, 0.0, sigma1, 0.0, sigma2, sigma1, sigma2)
    off1 = expected_average(rule, 0.0, factor * sigma1, 0.0, sigma2, sigma1, sigma2)
    off2 = expected_average(rule, 0.0, sigma1, 0.0, factor * sigma2, sigma1, sigma2)
    return float((best - off2) / (best - off1))
