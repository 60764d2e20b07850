"""Score = entropy + calibration residual along one volatility series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..distributions import Gaussian
from ..numerics import RngStream
from ..scores import parse_rule
from .config import EntropyConfig
from .volatility import simulate_volatility


@dataclass(frozen=True)
class EntropyTrace:
    x: np.ndarray
    y: np.ndarray
    sd: np.ndarray
    score: Dict[str, np.ndarray]
    entropy: Dict[str, np.ndarray]

    def residual(self, rule):
        return self.score[rule] - self.entropy[rule]

    def header(self):
        cols = ["t", "x", "y", "sd"]
        for r in self.score:
            cols += [f"{r}_score", f"{r}_entropy", f"{r}_residual"]
        return cols

    def table(self):
        cols = [np.arange(self.x.size), self.x, self.y, self.sd]
        for r in self.score:
            cols += [self.score[r], self.entropy[r], self.residual(r)]
        return list(zip(*cols))

    def residual_sd_ratio(self, rule):
        """SD of the residual on high-volatility points over low-volatility points
        (split at the median predictive SD)."""
        res = self.residual(rule)
        high = self.sd > np.median(self.sd)
        return float(np.std(res[high]) / np.std(res[~high]))


def entropy_decomposition_trace(cfg: EntropyConfig = EntropyConfig()) -> EntropyTrace:
    vc = cfg.volatility
    x, y = simulate_volatility(vc, RngStream(vc.seed, 0))
    sd = vc.sigma_y * np.exp(x)
    score, ent = {}, {}
    for name in cfg.rules:
        rule = parse_rule(name)
        score[rule.label] = rule.gaussian(0.0, sd, y)
        ent[rule.label] = np.array([rule.entropy(Gaussian(0.0, s)).value for s in sd])
    return EntropyTrace(x, y, sd, score, ent)
