"""Numerical checks of scale functions, local scale invariance, sensitivity
to outlying observations and propriety.

For a location-scale family Q_theta, theta = (mu, sigma), the scale function
is the leading coefficient in

    S(Q_theta, Q_theta) - S(Q_{theta + t sigma r}, Q_theta) = s(Q_theta, r) t^p + o(t^p)

where S(P, Q) is the expected score of P under Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import Gaussian, LocationScale
from .exceptions import NoiseDominated
from .kernels import MCBudget
from .numerics import RngStream
from .scores import Rule, parse_rule

DEFAULT_T_GRID = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class ScaleProbe:
    """Where and along which direction to measure the scale function.

    Parameters
    ----------
    base : distribution of Z; Q_theta is the law of mu + sigma Z
    mu, sigma : theta
    r : direction (r1, r2) in parameter space
    t_grid : decreasing step sizes
    """

    base: object = Gaussian(0.0, 1.0)
    mu: float = 0.0
    sigma: float = 1.0
    r: tuple = (1.0, 0.0)
    t_grid: tuple = DEFAULT_T_GRID

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        t = np.asarray(self.t_grid, dtype=float)
        if t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) >= 0):
            raise ValueError("t_grid needs at least two strictly decreasing positive steps")
        if np.any(1 - t * abs(self.r[1]) <= 0):
            raise ValueError("t_grid too coarse: sigma (1 +/- t r2) must stay positive")
        object.__setattr__(self, "t_grid", tuple(float(v) for v in t))
        object.__setattr__(self, "r", (float(self.r[0]), float(self.r[1])))

    def law(self, t=0.0, sign=1.0):
        """Q_{theta + t sigma r} (sign flips r)."""
        mu = self.mu + sign * t * self.sigma * self.r[0]
        sigma = self.sigma * (1 + sign * t * self.r[1])
        return LocationScale(self.base, mu, sigma).simplify()


@dataclass(frozen=True)
class ScaleEstimate:
    s_hat: float
    p_hat: float
    t: np.ndarray
    drop: np.ndarray
    drop_se: np.ndarray
    method: str


def _expected_drops(rule: Rule, probe: ScaleProbe, signs, budget, seed):
    """D(t, sign r) for every t and sign, plus standard errors."""
    truth = probe.law()
    t = np.asarray(probe.t_grid)
    if isinstance(truth, Gaussian):
        d = np.empty((len(signs), t.size))
        ref = rule.expected_gaussian(truth.mu, truth.sigma, truth.mu, truth.sigma)
        for i, sg in enumerate(signs):
            for j, tj in enumerate(t):
                P = probe.law(tj, sg)
                d[i, j] = ref - rule.expected_gaussian(P.mu, P.sigma, truth.mu, truth.sigma)
        return d, np.zeros_like(d), "analytic"
    # common random numbers: the same Y draws for every forecast
    budget = budget or MCBudget(1_000_000)
    rng = RngStream(seed, 0)
    ys = truth.sample(budget.n, rng)
    s_ref = rule.score_many(truth, ys, budget, RngStream(seed, 1))
    d = np.empty((len(signs), t.size))
    se = np.empty_like(d)
    for i, sg in enumerate(signs):
        for j, tj in enumerate(t):
            diff = s_ref - rule.score_many(probe.law(tj, sg), ys, budget, RngStream(seed, 2 + 2 * j + i))
            d[i, j] = diff.mean()
            se[i, j] = diff.std(ddof=1) / math.sqrt(diff.size)
    return d, se, "monte_carlo"


def _extrapolate(t, q, order):
    """Value at t=0 of the line through the two smallest (t^order, q) points."""
    x1, x2 = t[-2] ** order, t[-1] ** order
    return (q[-1] * x1 - q[-2] * x2) / (x1 - x2)


def estimate_scale_function(rule, probe: ScaleProbe, budget: Optional[MCBudget] = None, seed=0,
                            one_sided=False) -> ScaleEstimate:
    """Estimate (s, p) in D(t) = s t^p + o(t^p).

    By default the drop is symmetrised over r and -r, which cancels the odd
    t^3 term: q(t) = (D(t, r) + D(t, -r)) / (2 t^2) = s + O(t^2), and s_hat is
    q extrapolated to t = 0 from the two smallest steps. ``one_sided`` uses
    D(t, r) alone with a linear extrapolation in t, so s(r) and s(-r) can be
    compared. p_hat is the log-log slope of the drop between the two smallest
    steps.

    Gaussian bases are evaluated in closed form; anything else by Monte Carlo
    with common random numbers (``budget`` draws of Y).

    Raises
    ------
    NoiseDominated
        If a Monte Carlo standard error exceeds half the smallest drop.
    """
    rule = parse_rule(rule)
    signs = (1.0,) if one_sided else (1.0, -1.0)
    d, se, method = _expected_drops(rule, probe, signs, budget, seed)
    t = np.asarray(probe.t_grid)
    drop = d.mean(axis=0)
    drop_se = np.sqrt((se**2).sum(axis=0)) / len(signs)
    if method == "monte_carlo" and np.any(drop_se > 0.5 * np.min(np.abs(drop))):
        raise NoiseDominated(
            f"Monte Carlo error {drop_se.max():.3g} exceeds half the smallest drop {np.min(np.abs(drop)):.3g}; "
            "use larger t values or a larger budget")
    q = drop / t**2
    s_hat = _extrapolate(t, q, 1 if one_sided else 2)
    if drop[-1] > 0 and drop[-2] > 0:
        p_hat = math.log(drop[-2] / drop[-1]) / math.log(t[-2] / t[-1])
    else:
        p_hat = float("nan")
    return ScaleEstimate(float(s_hat), float(p_hat), t, drop, drop_se, method)


@dataclass(frozen=True)
class InvarianceResult:
    sigmas: np.ndarray
    s_hats: np.ndarray
    p_hats: np.ndarray
    spread: float
    exponent: float


def local_invariance_check(rule, base=Gaussian(0.0, 1.0), r=(1.0, 0.0), sigma_grid=(0.1, 1.0, 10.0), mu=0.0,
                           t_grid=DEFAULT_T_GRID, budget=None, seed=0) -> InvarianceResult:
    """Scale function across sigma.

    ``spread`` is max(s_hat)/min(s_hat) - 1 and ``exponent`` the least-squares
    slope of log s_hat on log sigma; a locally scale invariant rule has both
    near zero, a kernel score of order alpha has exponent alpha.
    """
    sig = np.asarray(sigma_grid, dtype=float)
    if sig.size < 2 or sig.max() / sig.min() < 100 * (1 - 1e-12):
        raise ValueError("sigma_grid must span at least two decades")
    ests = [estimate_scale_function(rule, ScaleProbe(base, mu, s, tuple(r), tuple(t_grid)), budget, seed)
            for s in sig]
    s_hats = np.array([e.s_hat for e in ests])
    p_hats = np.array([e.p_hat for e in ests])
    spread = float(s_hats.max() / s_hats.min() - 1)
    slope = float(np.polyfit(np.log(sig), np.log(s_hats), 1)[0])
    return InvarianceResult(sig, s_hats, p_hats, spread, slope)


@dataclass(frozen=True)
class SensitivityProbe:
    """Forecast P and a strictly increasing grid of observation magnitudes."""

    P: object
    y_grid: tuple = tuple(10.0 ** np.arange(2, 6))

    def __post_init__(self):
        y = np.asarray(self.y_grid, dtype=float)
        if y.size < 3 or np.any(np.diff(y) <= 0):
            raise ValueError("y_grid needs at least three strictly increasing values")
        object.__setattr__(self, "y_grid", tuple(float(v) for v in y))


def estimate_sensitivity(rule, probe: SensitivityProbe, budget=None, seed=0) -> float:
    """Growth exponent of |S(P, y)| in |y|.

    Least-squares slope of log|S| on log|y| over the upper half of the grid.
    """
    rule = parse_rule(rule)
    y = np.asarray(probe.y_grid)
    s = np.abs(rule.score_many(probe.P, y, budget, RngStream(seed, 0)))
    half = y.size // 2
    yy, ss = y[half:], s[half:]
    if np.any(ss <= 0):
        raise ValueError("score vanishes on the grid tail")
    return float(np.polyfit(np.log(np.abs(yy)), np.log(ss), 1)[0])


def default_forecast_grid(truth: Gaussian, n=41):
    """n x n grid of (mu, sigma) centred exactly on the truth.

    mu spans truth.mu +/- truth.sigma, sigma spans [sigma/2, 2 sigma] geometrically.
    """
    j = np.arange(n) - (n - 1) // 2
    half = (n - 1) / 2
    return truth.mu + truth.sigma * j / half, truth.sigma * 2.0 ** (j / half)


@dataclass(frozen=True)
class ProprietyResult:
    argmax: tuple
    surface: np.ndarray
    mu_grid: np.ndarray
    sigma_grid: np.ndarray


def propriety_sweep(rule, truth: Gaussian, forecast_grid: Optional[Sequence] = None) -> ProprietyResult:
    """Forecast (mu, sigma) maximizing the expected Gaussian score over a grid."""
    rule = parse_rule(rule)
    mus, sigmas = forecast_grid if forecast_grid is not None else default_forecast_grid(truth)
    mus, sigmas = np.asarray(mus, dtype=float), np.asarray(sigmas, dtype=float)
    M, S = np.meshgrid(mus, sigmas, indexing="ij")
    surface = np.asarray(rule.expected_gaussian(M, S, truth.mu, truth.sigma))
    i, j = np.unravel_index(np.argmax(surface), surface.shape)
    return ProprietyResult((float(mus[i]), float(sigmas[j])), surface, mus, sigmas)
