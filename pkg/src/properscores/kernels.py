"""Negative-definite kernels g(x, y) = min(|x - y|^alpha, c) and the
expectations E_{P,P} g(X, Y) and E_P g(X, y) that kernel scores are built from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, signal, special

from .distributions import Ensemble, Gaussian, Laplace, LocationScale, NegBin
from .exceptions import NonFiniteExpectation, WeightSumError
from .numerics import SQRT_PI, RngStream, std_normal_cdf, std_normal_pdf

METHODS = ("analytic", "ensemble", "monte_carlo", "exact_sum")


@dataclass(frozen=True)
class KernelSpec:
    """Power kernel ``|x - y|^alpha``, optionally truncated at ``c``.

    Parameters
    ----------
    alpha : float in (0, 2]
    trunc : float > 0, optional
        Truncation level. Truncating keeps the kernel negative definite only
        for ``alpha <= 1``, so ``trunc`` with ``alpha > 1`` is rejected.
    """

    alpha: float = 1.0
    trunc: Optional[float] = None

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0 < alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        if self.trunc is not None:
            c = float(self.trunc)
            if not c > 0:
                raise ValueError(f"truncation level must be positive, got {c}")
            if alpha > 1:
                raise ValueError("a truncated power kernel is only negative definite for alpha <= 1")
            if math.isinf(c):
                c = None
            object.__setattr__(self, "trunc", c)

    def of_distance(self, d):
        """g as a function of the signed difference ``d = x - y``."""
        d = np.abs(np.asarray(d, dtype=float))
        g = d if self.alpha == 1 else d**self.alpha
        if self.trunc is not None:
            g = np.minimum(g, self.trunc)
        return g

    def __call__(self, x, y):
        return kernel_eval(self, x, y)

    def scaled(self, sigma):
        """Kernel seen by Z when X = mu + sigma Z: g(sigma d) = sigma^alpha g'(d)."""
        if self.trunc is None:
            return self
        return KernelSpec(self.alpha, self.trunc / sigma**self.alpha)


CRPS_KERNEL = KernelSpec(1.0)


def kernel_eval(k: KernelSpec, x, y):
    """g(x, y); vectorized over broadcastable ``x`` and ``y``."""
    out = k.of_distance(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return out if np.ndim(out) else float(out)


def negdef_check(k: KernelSpec, points, weights, tol=1e-12):
    """Quadratic form sum_ij a_i a_j g(x_i, x_j) for zero-sum weights ``a``.

    Non-positive for every negative-definite kernel.
    """
    x = np.asarray(points, dtype=float).ravel()
    a = np.asarray(weights, dtype=float).ravel()
    if x.shape != a.shape:
        raise ValueError("points and weights must have the same length")
    if abs(a.sum()) > tol * max(1.0, np.abs(a).sum()):
        raise WeightSumError(f"weights sum to {a.sum():.3g}, not 0")
    g = k.of_distance(x[:, None] - x[None, :])
    return float(a @ g @ a)


@dataclass(frozen=True)
class MCBudget:
    """Number of draws per Monte Carlo expectation."""

    n: int = 100_000

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError("a Monte Carlo budget needs at least 2 draws")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class KernelExpectations:
    """E_{P,P} g(X, Y) and E_P g(X, y), with Monte Carlo standard errors when relevant."""

    e_pp: float
    e_py: float
    method: str
    e_pp_se: float = 0.0
    e_py_se: float = 0.0


def e_function(mu, sigma, c):
    """E min(|X|, c) for X ~ N(mu, sigma^2).

    Written in terms of |mu| so that large offsets do not cancel; the result
    is clamped to [0, c].
    """
    mu = np.abs(np.asarray(mu, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(sigma <= 0) or np.any(c <= 0):
        raise ValueError("e_function needs sigma > 0 and c > 0")
    Phi, phi = std_normal_cdf, std_normal_pdf
    a = mu / sigma
    out = (
        mu * Phi((c - mu) / sigma)
        - 2.0 * mu * Phi(-a)
        + c * Phi((mu - c) / sigma)
        + (mu + c) * Phi((-c - mu) / sigma)
        + sigma * (2.0 * phi(a) - phi((c - mu) / sigma) - phi((c + mu) / sigma))
    )
    out = np.clip(out, 0.0, c)
    return out if np.ndim(out) else float(out)


def gaussian_mean_abs(mu, sigma):
    """E|X| for X ~ N(mu, sigma^2) (folded normal mean)."""
    mu = np.asarray(mu, dtype=float)
    out = sigma * math.sqrt(2.0 / math.pi) * np.exp(-0.5 * (mu / sigma) ** 2) + mu * (1.0 - 2.0 * std_normal_cdf(-mu / sigma))
    return out if np.ndim(out) else float(out)


def gaussian_abs_moment(m, s, alpha):
    """E|X|^alpha for X ~ N(m, s^2).

    Confluent hypergeometric form for moderate ``m/s``; adaptive quadrature
    once ``m^2 / (2 s^2)`` exceeds 30, where 1F1 loses accuracy.
    """
    m, s, alpha = float(m), float(s), float(alpha)
    if alpha == 1:
        return gaussian_mean_abs(m, s)
    if alpha == 2:
        return m * m + s * s
    u = m * m / (2 * s * s)
    if u <= 30:
        pre = s**alpha * 2 ** (alpha / 2) * math.exp(special.gammaln((alpha + 1) / 2)) / SQRT_PI
        return float(pre * special.hyp1f1(-alpha / 2, 0.5, -u))
    z0 = -m / s
    f = lambda z: abs(m + s * z) ** alpha * std_normal_pdf(z)
    lo, hi = min(z0, 0.0) - 40, max(z0, 0.0) + 40
    val, _ = integrate.quad(f, lo, hi, points=[z0, 0.0], limit=200, epsabs=0, epsrel=1e-12)
    return float(val)


def _gaussian(k, d: Gaussian, y):
    mu_y = d.mu - y
    sig = d.sigma
    if k.trunc is None:
        if k.alpha == 1:
            return 2 * sig / SQRT_PI, gaussian_mean_abs(mu_y, sig)
        return gaussian_abs_moment(0.0, math.sqrt(2) * sig, k.alpha), gaussian_abs_moment(mu_y, sig, k.alpha)
    if k.alpha == 1:
        return e_function(0.0, math.sqrt(2) * sig, k.trunc), e_function(mu_y, sig, k.trunc)
    return None


def _laplace(k, d: Laplace, y):
    if k.trunc is not None:
        return None
    dist = abs(d.mu - y)
    b = d.b
    if k.alpha == 1:
        return 1.5 * b, dist + b * math.exp(-dist / b)
    if k.alpha == 2:
        return 4 * b * b, 2 * b * b + dist * dist
    return None


def _ensemble_pp(k, x, unbiased):
    m = x.size
    denom = m * (m - 1) if unbiased else m * m
    if m == 1:
        return 0.0
    if k.alpha == 1:
        i = np.arange(1, m + 1)
        cum = np.cumsum(x)
        if k.trunc is None:
            pair_sum = np.dot(2 * i - m - 1, x)
        else:
            # for each j, members within c below x_j contribute x_j - x_i, the rest c
            lo = np.searchsorted(x, x - k.trunc, side="right")
            idx = np.arange(m)
            n_near = idx - lo
            near = n_near * x - (cum[idx] - x - np.where(lo > 0, cum[lo - 1], 0.0))
            pair_sum = np.sum(near + (lo * k.trunc))
        return float(2 * pair_sum / denom)
    total = 0.0
    step = max(1, 4_000_000 // m)
    for start in range(0, m, step):
        total += float(k.of_distance(x[start:start + step, None] - x[None, :]).sum())
    return total / denom


def _ensemble(k, e: Ensemble, y, unbiased=False):
    x = e.sorted_members
    return _ensemble_pp(k, x, unbiased), float(np.mean(k.of_distance(x - y)))


def _negbin(k, d: NegBin, y):
    support, p = d.support_pmf()
    e_py = float(np.dot(p, k.of_distance(support - y)))
    ac = signal.fftconvolve(p, p[::-1])[p.size:]  # lags 1..K
    ac = np.clip(ac, 0.0, None)
    lags = np.arange(1, p.size, dtype=float)
    e_pp = float(2.0 * np.dot(ac, k.of_distance(lags)))
    return e_pp, e_py


def _monte_carlo(k, dist, y, budget, rng):
    x = dist.sample(budget.n, rng)
    g_y = k.of_distance(x - y)
    h = budget.n // 2
    g_pp = k.of_distance(x[:h] - x[h:2 * h])
    vals = (g_pp.mean(), g_y.mean(), g_pp.std(ddof=1) / math.sqrt(h), g_y.std(ddof=1) / math.sqrt(budget.n))
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteExpectation("Monte Carlo kernel expectation is not finite")
    return KernelExpectations(float(vals[0]), float(vals[1]), "monte_carlo", float(vals[2]), float(vals[3]))


def expectations(k: KernelSpec, dist, y, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None,
                 unbiased=False, force_mc=False) -> KernelExpectations:
    """Kernel expectations for predictive ``dist`` and observation ``y``.

    Closed forms are used for Gaussian (any alpha; truncated only for alpha=1)
    and Laplace (alpha in {1, 2}, untruncated); ensembles are evaluated
    exactly on the empirical measure, negative binomials by summation over
    the support (tail mass below 1e-12). Everything else, or ``force_mc``,
    goes through Monte Carlo with ``budget.n`` draws, using disjoint halves of
    the sample as the two independent copies for ``e_pp``.

    A location-scale wrapper is reduced to its base: with X = mu + sigma Z,
    g(X - y) = sigma^alpha g'(Z - (y - mu)/sigma) where g' has truncation
    c / sigma^alpha.
    """
    y = float(y)
    if not math.isfinite(y):
        raise ValueError("observation must be finite")
    if not force_mc:
        if isinstance(dist, LocationScale):
            sub = expectations(k.scaled(dist.sigma), dist.base, (y - dist.mu) / dist.sigma, budget, rng, unbiased)
            f = dist.sigma**k.alpha
            return KernelExpectations(sub.e_pp * f, sub.e_py * f, sub.method, sub.e_pp_se * f, sub.e_py_se * f)
        res, method = None, "analytic"
        if isinstance(dist, Gaussian):
            res = _gaussian(k, dist, y)
        elif isinstance(dist, Laplace):
            res = _laplace(k, dist, y)
        elif isinstance(dist, Ensemble):
            res, method = _ensemble(k, dist, y, unbiased), "ensemble"
        elif isinstance(dist, NegBin):
            res, method = _negbin(k, dist, y), "exact_sum"
        if res is not None:
            e_pp, e_py = float(res[0]), float(res[1])
            if not (math.isfinite(e_pp) and math.isfinite(e_py)):
                raise NonFiniteExpectation(f"kernel expectation not finite ({e_pp}, {e_py})")
            return KernelExpectations(e_pp, e_py, method)
    return _monte_carlo(k, dist, y, budget or MCBudget(), rng or RngStream(0, 0))


def e_py_many(k: KernelSpec, dist, ys, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None):
    """E_P g(X, y) for a vector of observations, sharing one MC sample if needed."""
    ys = np.asarray(ys, dtype=float)
    if isinstance(dist, LocationScale):
        f = dist.sigma**k.alpha
        return f * e_py_many(k.scaled(dist.sigma), dist.base, (ys - dist.mu) / dist.sigma, budget, rng)
    if isinstance(dist, Gaussian):
        d = dist.mu - ys
        if k.trunc is None:
            if k.alpha == 1:
                return gaussian_mean_abs(d, dist.sigma)
            if k.alpha == 2:
                return d * d + dist.sigma**2
            return np.vectorize(lambda v: gaussian_abs_moment(v, dist.sigma, k.alpha))(d)
        if k.alpha == 1:
            return e_function(d, dist.sigma, k.trunc)
    if isinstance(dist, Laplace) and k.trunc is None and k.alpha in (1, 2):
        d = np.abs(dist.mu - ys)
        b = dist.b
        return d + b * np.exp(-d / b) if k.alpha == 1 else 2 * b * b + d * d
    if isinstance(dist, Ensemble):
        x = dist.members
    elif isinstance(dist, NegBin):
        x, p = dist.support_pmf()
    else:
        x = dist.sample((budget or MCBudget()).n, rng or RngStream(0, 0))
    out = np.empty(ys.shape)
    flat, res = ys.ravel(), out.reshape(-1)
    step = max(1, 4_000_000 // x.size)
    for start in range(0, flat.size, step):
        g = k.of_distance(x[None, :] - flat[start:start + step, None])
        res[start:start + step] = g @ p if isinstance(dist, NegBin) else g.mean(axis=1)
    return out
