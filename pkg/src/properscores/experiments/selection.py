"""Model-selection frequencies with Wilson score intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.stats import binomtest


def wilson_interval(successes, trials, level=0.95):
    """Wilson score interval for a binomial proportion."""
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def true_model_wins(mean_scores, true_index=0):
    """True when the true model's mean score is strictly the largest; ties lose."""
    s = np.asarray(mean_scores, dtype=float)
    others = np.delete(s, true_index, axis=-1)
    return s[..., true_index] > others.max(axis=-1)


@dataclass(frozen=True)
class SelectionRow:
    rule: str
    delta: float
    successes: int
    replicates: int
    variant: str = ""

    @property
    def prob_correct(self):
        return self.successes / self.replicates

    @property
    def interval(self):
        return wilson_interval(self.successes, self.replicates)

    @property
    def wilson_halfwidth(self):
        lo, hi = self.interval
        return 0.5 * (hi - lo)


@dataclass
class SelectionCurve:
    """Probability of selecting the true model per (variant, rule, delta)."""

    rows: List[SelectionRow] = field(default_factory=list)

    def add(self, rule, delta, successes, replicates, variant=""):
        self.rows.append(SelectionRow(str(rule), float(delta), int(successes), int(replicates), variant))

    def get(self, rule, delta, variant=""):
        for r in self.rows:
            if r.rule == rule and np.isclose(r.delta, delta) and r.variant == variant:
                return r
        raise KeyError((rule, delta, variant))

    header = ("variant", "rule", "delta", "prob_correct", "successes", "replicates", "wilson_low",
              "wilson_high", "wilson_halfwidth")

    def table(self):
        out = []
        for r in self.rows:
            lo, hi = r.interval
            out.append((r.variant, r.rule, r.delta, r.prob_correct, r.successes, r.replicates, lo, hi,
                        r.wilson_halfwidth))
        return out
