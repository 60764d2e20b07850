"""Predictive distributions: Gaussian, Laplace, negative binomial, ensembles
and location-scale wrappers around any of them.

Every distribution is an immutable dataclass with ``sample``, ``log_pdf``,
``cdf``, ``mean`` and ``var``. Module-level functions of the same names
dispatch on the first argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import stats

from .exceptions import SupportError, UnsupportedDistribution
from .numerics import RngStream, std_normal_cdf

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: tail mass left out when a discrete support is truncated
SUPPORT_TAIL = 1e-12


def _positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class Gaussian:
    """Normal distribution N(mu, sigma^2)."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _finite("mu", self.mu))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def sample(self, n, rng: RngStream):
        return rng.normal(n, self.mu, self.sigma)

    def log_pdf(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        out = -0.5 * z * z - math.log(self.sigma) - _LOG_SQRT_2PI
        return out if np.ndim(out) else float(out)

    def cdf(self, y):
        return std_normal_cdf((np.asarray(y, dtype=float) - self.mu) / self.sigma)

    def mean(self):
        return self.mu

    def var(self):
        return self.sigma**2


@dataclass(frozen=True)
class Laplace:
    """Laplace distribution with location ``mu`` and scale ``b`` (variance 2 b^2)."""

    mu: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _finite("mu", self.mu))
        object.__setattr__(self, "b", _positive("b", self.b))

    def sample(self, n, rng: RngStream):
        u = rng.uniform(n) - 0.5
        return self.mu - self.b * np.sign(u) * np.log1p(-2.0 * np.abs(u))

    def log_pdf(self, y):
        out = -math.log(2.0 * self.b) - np.abs(np.asarray(y, dtype=float) - self.mu) / self.b
        return out if np.ndim(out) else float(out)

    def cdf(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.b
        out = np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))
        return out if out.ndim else float(out)

    def mean(self):
        return self.mu

    def var(self):
        return 2.0 * self.b**2


@dataclass(frozen=True)
class NegBin:
    """Negative binomial with mean ``mu`` and dispersion ``s``.

    Var(Y) = mu + mu^2 / s. In scipy's (n, p) parameterization this is
    ``nbinom(n=s, p=s/(s+mu))``.
    """

    mu: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive("mu", self.mu))
        object.__setattr__(self, "s", _positive("s", self.s))

    @property
    def frozen(self):
        return stats.nbinom(self.s, self.s / (self.s + self.mu))

    def sample(self, n, rng: RngStream):
        g = rng.generator
        lam = g.gamma(self.s, self.mu / self.s, size=n)
        return g.poisson(lam).astype(float)

    def _check_support(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise SupportError(f"negative binomial needs non-negative integer y, got {y}")
        return y

    def log_pdf(self, y):
        y = self._check_support(y)
        out = self.frozen.logpmf(y)
        return out if np.ndim(out) else float(out)

    def cdf(self, y):
        out = self.frozen.cdf(np.floor(np.asarray(y, dtype=float)))
        return out if np.ndim(out) else float(out)

    def mean(self):
        return self.mu

    def var(self):
        return self.mu + self.mu**2 / self.s

    def support_upper(self, tail=SUPPORT_TAIL):
        """Smallest K with P(Y > K) < tail."""
        k = int(self.frozen.isf(tail))
        while self.frozen.sf(k) >= tail:
            k += 1
        return k

    def support_pmf(self, tail=SUPPORT_TAIL, upper=None):
        """(k, pmf) over 0..K, K from ``support_upper`` unless given."""
        k_max = self.support_upper(tail) if upper is None else int(upper)
        k = np.arange(k_max + 1, dtype=float)
        return k, self.frozen.pmf(k)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Empirical measure of ``m >= 1`` finite members."""

    members: np.ndarray
    _sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.members, dtype=float)).ravel()
        if x.size < 1:
            raise ValueError("ensemble needs at least one member")
        if not np.all(np.isfinite(x)):
            raise ValueError("ensemble members must be finite")
        x.setflags(write=False)
        s = np.sort(x)
        s.setflags(write=False)
        object.__setattr__(self, "members", x)
        object.__setattr__(self, "_sorted", s)

    @property
    def m(self):
        return self.members.size

    @property
    def sorted_members(self):
        return self._sorted

    def sample(self, n, rng: RngStream):
        idx = rng.generator.integers(0, self.m, size=n)
        return self.members[idx]

    def log_pdf(self, y):
        raise UnsupportedDistribution("an ensemble has no density; the log-score is undefined")

    def cdf(self, y):
        out = np.searchsorted(self._sorted, np.asarray(y, dtype=float), side="right") / self.m
        return out if np.ndim(out) else float(out)

    def mean(self):
        return float(np.mean(self.members))

    def var(self):
        return float(np.var(self.members))


@dataclass(frozen=True)
class LocationScale:
    """Law of ``mu + sigma * Z`` with ``Z ~ base``."""

    base: "Distribution"
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", _finite("mu", self.mu))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def _z(self, y):
        return (np.asarray(y, dtype=float) - self.mu) / self.sigma

    def sample(self, n, rng: RngStream):
        return self.mu + self.sigma * self.base.sample(n, rng)

    def log_pdf(self, y):
        if isinstance(self.base, (NegBin, Ensemble)):
            raise UnsupportedDistribution("location-scale density needs a continuous base")
        out = self.base.log_pdf(self._z(y)) - math.log(self.sigma)
        return out if np.ndim(out) else float(out)

    def cdf(self, y):
        return self.base.cdf(self._z(y))

    def simplify(self):
        """Collapse onto a closed family when the base allows it."""
        base = self.base.simplify() if isinstance(self.base, LocationScale) else self.base
        if isinstance(base, Gaussian):
            return Gaussian(self.mu + self.sigma * base.mu, self.sigma * base.sigma)
        if isinstance(base, Laplace):
            return Laplace(self.mu + self.sigma * base.mu, self.sigma * base.b)
        if isinstance(base, Ensemble):
            return Ensemble(self.mu + self.sigma * base.members)
        if isinstance(base, LocationScale):
            return LocationScale(base.base, self.mu + self.sigma * base.mu, self.sigma * base.sigma)
        return self

    def mean(self):
        return self.mu + self.sigma * self.base.mean()

    def var(self):
        return self.sigma**2 * self.base.var()


Distribution = Union[Gaussian, Laplace, NegBin, Ensemble, LocationScale]


def sample(dist, n, rng: RngStream):
    if n < 1:
        raise ValueError("n must be at least 1")
    return dist.sample(int(n), rng)


def log_pdf(dist, y):
    return dist.log_pdf(y)


def cdf(dist, y):
    return dist.cdf(y)


def pairwise_mean_abs_diff(e, unbiased=False):
    """Mean of |x_i - x_j| over all ordered member pairs.

    Uses ``sum_{i<j} |x_i - x_j| = sum_i (2i - m - 1) x_(i)`` on the sorted
    members, so the cost is O(m log m).

    Parameters
    ----------
    e : Ensemble or array_like
    unbiased : bool, default False
        Divide by ``m (m - 1)`` instead of ``m^2`` (the plug-in value).
    """
    x = e.sorted_members if isinstance(e, Ensemble) else np.sort(np.asarray(e, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise ValueError("empty ensemble")
    i = np.arange(1, m + 1)
    total = 2.0 * np.dot(2 * i - m - 1, x)
    if unbiased:
        return float(total / (m * (m - 1))) if m > 1 else 0.0
    return float(total / (m * m))


def mean_abs_dev(e, y):
    """(1/m) sum_i |x_i - y|."""
    x = e.members if isinstance(e, Ensemble) else np.asarray(e, dtype=float).ravel()
    return float(np.mean(np.abs(x - float(y))))
