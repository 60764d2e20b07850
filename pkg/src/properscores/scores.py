"""Scoring rules, positively oriented (larger is better).

Kernel scores ``1/2 E_{P,P} g(X, Y) - E_P g(X, y)``, their generalization
through a convex decreasing function ``h``, the scaled CRPS, truncated robust
variants, the log-score and the Dawid-Sebastiani score. Gaussian forecasts use
closed forms throughout; every rule also has a Gaussian-vs-Gaussian expected
score and an entropy ``H(P) = S(P, P)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import Ensemble, Gaussian, Laplace, LocationScale, NegBin
from .exceptions import (
    DegenerateDistribution,
    ObservationError,
    SignError,
    UnsupportedDistribution,
)
from .kernels import (
    CRPS_KERNEL,
    KernelSpec,
    MCBudget,
    e_function,
    e_py_many,
    expectations,
    gaussian_abs_moment,
)
from .numerics import SQRT_PI, RngStream, std_normal_cdf, std_normal_pdf

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ScoreValue:
    """A single score with the evaluation method and its MC standard error."""

    value: float
    method: str = "analytic"
    se: float = 0.0

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------- h-functions

_H_TAGS = ("linear", "log", "sqrt", "shifted_log")


@dataclass(frozen=True)
class HFunction:
    """Convex decreasing h on the positive half-line.

    ``linear`` gives the kernel score itself, ``log`` the standardized score,
    ``shifted_log`` a version that stays finite for degenerate forecasts.
    """

    tag: str = "linear"
    gamma: float = 0.0

    def __post_init__(self):
        if self.tag not in _H_TAGS:
            raise ValueError(f"unknown h-function {self.tag!r}; choose from {_H_TAGS}")
        if self.tag == "shifted_log" and not self.gamma > 0:
            raise ValueError("shifted_log needs gamma > 0")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def log(cls):
        return cls("log")

    @classmethod
    def sqrt(cls):
        return cls("sqrt")

    @classmethod
    def shifted_log(cls, gamma):
        return cls("shifted_log", float(gamma))

    @property
    def needs_positive(self):
        return self.tag in ("log", "sqrt")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "linear":
            out = -0.5 * x
        elif self.tag == "log":
            out = -0.5 * np.log(x)
        elif self.tag == "sqrt":
            out = -np.sqrt(x)
        else:
            out = -0.5 * np.log(x + self.gamma)
        return out if out.ndim else float(out)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "linear":
            out = np.full_like(x, -0.5)
        elif self.tag == "log":
            out = -0.5 / x
        elif self.tag == "sqrt":
            out = -0.5 / np.sqrt(x)
        else:
            out = -0.5 / (x + self.gamma)
        return out if out.ndim else float(out)

    def __str__(self):
        return f"shifted_log:gamma={self.gamma:g}" if self.tag == "shifted_log" else self.tag


# ------------------------------------------------------ Gaussian closed forms


def crps_gaussian(mu, sigma, y):
    """CRPS of N(mu, sigma^2) at y, positively oriented."""
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    z = (y - mu) / sigma
    return sigma / SQRT_PI - 2 * sigma * std_normal_pdf(z) - (y - mu) * (2 * std_normal_cdf(z) - 1)


def scrps_gaussian(mu, sigma, y):
    """Scaled CRPS of N(mu, sigma^2) at y."""
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    z = (mu - y) / sigma
    return (-SQRT_PI * std_normal_pdf(z) - 0.5 * SQRT_PI * z * (2 * std_normal_cdf(z) - 1)
            - 0.5 * np.log(2 * sigma / SQRT_PI))


def rcrps_gaussian(mu, sigma, y, c):
    """CRPS with the kernel truncated at c."""
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    return 0.5 * e_function(0.0, _SQRT2 * sigma, c) - e_function(mu - y, sigma, c)


def rscrps_gaussian(mu, sigma, y, c):
    """Scaled CRPS with the kernel truncated at c."""
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    e_pp = e_function(0.0, _SQRT2 * sigma, c)
    return -e_function(mu - y, sigma, c) / e_pp - 0.5 * np.log(e_pp)


def logs_gaussian(mu, sigma, y):
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    z = (y - mu) / sigma
    return -0.5 * z * z - np.log(sigma) - 0.5 * _LOG_2PI


def dss_gaussian(mu, sigma, y):
    mu, sigma, y = (np.asarray(a, dtype=float) for a in (mu, sigma, y))
    return -((y - mu) ** 2) / (2 * sigma**2) - np.log(sigma)


# ------------------------------------------- expected scores, Gaussian truth


def _diff(mu_hat, sigma_hat, mu, sigma):
    mu_hat, sigma_hat, mu, sigma = (np.asarray(a, dtype=float) for a in (mu_hat, sigma_hat, mu, sigma))
    return mu_hat, sigma_hat, mu - mu_hat, np.sqrt(sigma_hat**2 + sigma**2), sigma


def expected_crps_gaussian(mu_hat, sigma_hat, mu, sigma):
    """E_{Y ~ N(mu, sigma^2)} CRPS(N(mu_hat, sigma_hat^2), Y)."""
    _, sh, md, sd, _ = _diff(mu_hat, sigma_hat, mu, sigma)
    return sh / SQRT_PI - 2 * sd * std_normal_pdf(md / sd) + md * (1 - 2 * std_normal_cdf(md / sd))


def expected_scrps_gaussian(mu_hat, sigma_hat, mu, sigma):
    _, sh, md, sd, _ = _diff(mu_hat, sigma_hat, mu, sigma)
    return (-(SQRT_PI / sh) * (sd * std_normal_pdf(md / sd) - md / 2 + md * std_normal_cdf(md / sd))
            - 0.5 * np.log(2 * sh / SQRT_PI))


def expected_rcrps_gaussian(mu_hat, sigma_hat, mu, sigma, c):
    _, sh, md, sd, _ = _diff(mu_hat, sigma_hat, mu, sigma)
    return 0.5 * e_function(0.0, _SQRT2 * sh, c) - e_function(md, sd, c)


def expected_rscrps_gaussian(mu_hat, sigma_hat, mu, sigma, c):
    _, sh, md, sd, _ = _diff(mu_hat, sigma_hat, mu, sigma)
    e_pp = e_function(0.0, _SQRT2 * sh, c)
    return -e_function(md, sd, c) / e_pp - 0.5 * np.log(e_pp)


def expected_logs_gaussian(mu_hat, sigma_hat, mu, sigma):
    _, sh, md, _, s = _diff(mu_hat, sigma_hat, mu, sigma)
    return -0.5 * np.log(2 * np.pi * sh**2) - (s**2 + md**2) / (2 * sh**2)


def expected_dss_gaussian(mu_hat, sigma_hat, mu, sigma):
    _, sh, md, _, s = _diff(mu_hat, sigma_hat, mu, sigma)
    return -(s**2 + md**2) / (2 * sh**2) - np.log(sh)


# ---------------------------------------------------------- generic scores


def _as_float(x):
    return float(x) if np.ndim(x) == 0 else x


def log_score(P, y) -> ScoreValue:
    """log f(y); the density is a pmf for the negative binomial."""
    if isinstance(P, Ensemble) or (isinstance(P, LocationScale) and isinstance(P.base, Ensemble)):
        raise UnsupportedDistribution("the log-score needs a density; ensembles have none")
    method = "exact_sum" if isinstance(P, NegBin) else "analytic"
    return ScoreValue(float(P.log_pdf(y)), method)


def _negbin_crps(P: NegBin, y):
    # CRPS = -sum_k (F(k) - 1{k >= y})^2 over the integers
    upper = max(P.support_upper(), int(math.ceil(y)))
    k = np.arange(upper + 1, dtype=float)
    F = P.frozen.cdf(k)
    return -float(np.sum((F - (k >= y)) ** 2))


def kernel_score(k: KernelSpec, P, y, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None,
                 unbiased=False) -> ScoreValue:
    """1/2 E_{P,P} g(X, Y) - E_P g(X, y)."""
    y = float(y)
    if k == CRPS_KERNEL:
        if isinstance(P, Gaussian):
            return ScoreValue(float(crps_gaussian(P.mu, P.sigma, y)))
        if isinstance(P, NegBin):
            return ScoreValue(_negbin_crps(P, y), "exact_sum")
    if isinstance(P, Gaussian) and k.alpha == 1 and k.trunc is not None:
        return ScoreValue(float(rcrps_gaussian(P.mu, P.sigma, y, k.trunc)))
    ex = expectations(k, P, y, budget, rng, unbiased)
    se = math.hypot(0.5 * ex.e_pp_se, ex.e_py_se)
    return ScoreValue(0.5 * ex.e_pp - ex.e_py, ex.method, se)


def crps(P, y, **kw) -> ScoreValue:
    return kernel_score(CRPS_KERNEL, P, y, **kw)


def _generalized_from(h: HFunction, e_pp, e_py):
    if h.needs_positive and not e_pp > 0:
        raise DegenerateDistribution(
            "E_{P,P} g(X, Y) = 0 for a degenerate forecast; use HFunction.shifted_log(gamma)")
    return h(e_pp) + 2 * h.deriv(e_pp) * (e_py - e_pp)


def generalized_kernel_score(h: HFunction, k: KernelSpec, P, y, budget: Optional[MCBudget] = None,
                             rng: Optional[RngStream] = None, unbiased=False) -> ScoreValue:
    """h(e_pp) + 2 h'(e_pp) (e_py - e_pp).

    With ``h`` linear this is exactly ``kernel_score``; with ``h = -1/2 log``
    it is the standardized kernel score ``-1/2 log e_pp - e_py/e_pp + 1``.
    """
    if h.tag == "linear":
        return kernel_score(k, P, y, budget, rng, unbiased)
    ex = expectations(k, P, float(y), budget, rng, unbiased)
    value = _generalized_from(h, ex.e_pp, ex.e_py)
    se = 0.0
    if ex.method == "monte_carlo":
        d = h.deriv(ex.e_pp)
        se = 2 * abs(d) * math.hypot(ex.e_py_se, ex.e_py / max(ex.e_pp, 1e-300) * ex.e_pp_se)
    return ScoreValue(float(value), ex.method, se)


def _scaled_from(e_pp, e_py):
    if not e_pp > 0:
        raise DegenerateDistribution(
            "scaled score undefined: E_{P,P} g(X, Y) = 0 (degenerate forecast); "
            "use generalized_kernel_score with HFunction.shifted_log(gamma)")
    return -e_py / e_pp - 0.5 * math.log(e_pp)


def _scaled(k, P, y, budget, rng, unbiased):
    ex = expectations(k, P, float(y), budget, rng, unbiased)
    value = _scaled_from(ex.e_pp, ex.e_py)
    se = 0.0
    if ex.method == "monte_carlo":
        se = math.hypot(ex.e_py_se / ex.e_pp, (ex.e_py / ex.e_pp**2 - 0.5 / ex.e_pp) * ex.e_pp_se)
    return ScoreValue(value, ex.method, se)


def scrps(P, y, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None, unbiased=False) -> ScoreValue:
    """-E_P|X - y| / E_{P,P}|X - Y| - 1/2 log E_{P,P}|X - Y|.

    Raises
    ------
    DegenerateDistribution
        If the forecast is a point mass.
    """
    if isinstance(P, Gaussian):
        return ScoreValue(float(scrps_gaussian(P.mu, P.sigma, y)))
    return _scaled(CRPS_KERNEL, P, y, budget, rng, unbiased)


def _check_c(c):
    c = float(c)
    if not c > 0:
        raise ValueError(f"truncation level must be positive, got {c}")
    return c


def rcrps(c, P, y, budget=None, rng=None, unbiased=False) -> ScoreValue:
    return kernel_score(KernelSpec(1.0, _check_c(c)), P, y, budget, rng, unbiased)


def rscrps(c, P, y, budget=None, rng=None, unbiased=False) -> ScoreValue:
    c = _check_c(c)
    if isinstance(P, Gaussian):
        return ScoreValue(float(rscrps_gaussian(P.mu, P.sigma, y, c)))
    return _scaled(KernelSpec(1.0, c), P, y, budget, rng, unbiased)


def robust_scores(c, P, y, budget=None, rng=None, unbiased=False):
    """(rCRPS, rSCRPS) with the kernel truncated at ``c``; both bounded in y."""
    return rcrps(c, P, y, budget, rng, unbiased), rscrps(c, P, y, budget, rng, unbiased)


def dss(P, y) -> ScoreValue:
    """-(y - m)^2 / (2 V) - 1/2 log V with m, V the forecast mean and variance."""
    m, v = P.mean(), P.var()
    if not v > 0:
        raise DegenerateDistribution("Dawid-Sebastiani score needs a positive forecast variance")
    return ScoreValue(-((float(y) - m) ** 2) / (2 * v) - 0.5 * math.log(v))


# ------------------------------------------------------------------ entropies


def _log_entropy(P):
    """E_P log f(X), i.e. minus the (differential) entropy."""
    if isinstance(P, Gaussian):
        return -0.5 * math.log(2 * math.pi * math.e * P.sigma**2)
    if isinstance(P, Laplace):
        return -(1 + math.log(2 * P.b))
    if isinstance(P, NegBin):
        _, p = P.support_pmf()
        p = p[p > 0]
        return float(np.sum(p * np.log(p)))
    if isinstance(P, LocationScale) and not isinstance(P.base, (Ensemble, NegBin)):
        return _log_entropy(P.base) - math.log(P.sigma)
    raise UnsupportedDistribution(f"no log-score entropy for {type(P).__name__}")


# ---------------------------------------------------------------- rule specs

RULE_NAMES = ("crps", "scrps", "logs", "dss", "rcrps", "rscrps", "kernel", "genkernel")


@dataclass(frozen=True)
class Rule:
    """A named scoring rule with its options.

    Parameters
    ----------
    name : one of ``RULE_NAMES``
    c : truncation level, required by ``rcrps`` and ``rscrps``; optional for
        ``kernel`` and ``genkernel``
    alpha : kernel exponent for ``kernel`` and ``genkernel``
    h : HFunction for ``genkernel``
    """

    name: str
    c: Optional[float] = None
    alpha: float = 1.0
    h: Optional[HFunction] = None

    def __post_init__(self):
        if self.name not in RULE_NAMES:
            raise ValueError(f"unknown rule {self.name!r}; choose from {RULE_NAMES}")
        if self.name in ("rcrps", "rscrps"):
            if self.c is None:
                raise ValueError(f"{self.name} needs a truncation level c")
            object.__setattr__(self, "c", _check_c(self.c))
        elif self.c is not None and self.name not in ("kernel", "genkernel"):
            raise ValueError(f"{self.name} takes no truncation level")
        if self.name == "genkernel" and self.h is None:
            raise ValueError("genkernel needs an h-function")
        if self.h is not None and self.name != "genkernel":
            raise ValueError("only genkernel takes an h-function")
        if self.alpha != 1.0 and self.name not in ("kernel", "genkernel"):
            raise ValueError(f"{self.name} has a fixed kernel exponent")
        if self.name in ("kernel", "genkernel"):
            KernelSpec(self.alpha, self.c)  # validate

    @property
    def kernel(self) -> Optional[KernelSpec]:
        if self.name in ("crps", "scrps"):
            return CRPS_KERNEL
        if self.name in ("rcrps", "rscrps"):
            return KernelSpec(1.0, self.c)
        if self.name in ("kernel", "genkernel"):
            return KernelSpec(self.alpha, self.c)
        return None

    @property
    def label(self):
        if self.name in ("rcrps", "rscrps"):
            return f"{self.name}(c={self.c:g})"
        if self.name == "kernel":
            return f"kernel(alpha={self.alpha:g}" + (f",c={self.c:g})" if self.c else ")")
        if self.name == "genkernel":
            return f"genkernel(h={self.h},alpha={self.alpha:g}" + (f",c={self.c:g})" if self.c else ")")
        return self.name

    def __str__(self):
        return self.label

    # standardized-type rules: scores scaled by E_{P,P} g
    @property
    def is_scaled(self):
        return self.name in ("scrps", "rscrps")

    def score(self, P, y, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None,
              unbiased=False) -> ScoreValue:
        n = self.name
        if isinstance(P, LocationScale):
            P = P.simplify()
        if n == "logs":
            return log_score(P, y)
        if n == "dss":
            return dss(P, y)
        if n == "crps":
            return crps(P, y, budget=budget, rng=rng, unbiased=unbiased)
        if n == "scrps":
            return scrps(P, y, budget, rng, unbiased)
        if n == "rcrps":
            return rcrps(self.c, P, y, budget, rng, unbiased)
        if n == "rscrps":
            return rscrps(self.c, P, y, budget, rng, unbiased)
        if n == "kernel":
            return kernel_score(self.kernel, P, y, budget, rng, unbiased)
        return generalized_kernel_score(self.h, self.kernel, P, y, budget, rng, unbiased)

    def __call__(self, P, y, **kw):
        return self.score(P, y, **kw).value

    def gaussian(self, mu, sigma, y):
        """Vectorized score of N(mu, sigma^2) forecasts at observations y."""
        n = self.name
        if n == "crps":
            return crps_gaussian(mu, sigma, y)
        if n == "scrps":
            return scrps_gaussian(mu, sigma, y)
        if n == "rcrps":
            return rcrps_gaussian(mu, sigma, y, self.c)
        if n == "rscrps":
            return rscrps_gaussian(mu, sigma, y, self.c)
        if n == "logs":
            return logs_gaussian(mu, sigma, y)
        if n == "dss":
            return dss_gaussian(mu, sigma, y)
        mu, sigma, y = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mu, sigma, y)))
        out = np.array([self.score(Gaussian(m, s), v).value for m, s, v in zip(mu.ravel(), sigma.ravel(), y.ravel())])
        return out.reshape(mu.shape)

    def score_many(self, P, ys, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None):
        """Scores of one forecast at many observations, as an array."""
        if isinstance(P, LocationScale):
            P = P.simplify()
        ys = np.asarray(ys, dtype=float)
        n = self.name
        if isinstance(P, Gaussian) and n not in ("kernel", "genkernel"):
            return self.gaussian(P.mu, P.sigma, ys)
        if n == "logs":
            if isinstance(P, Ensemble):
                raise UnsupportedDistribution("the log-score needs a density; ensembles have none")
            return np.asarray(P.log_pdf(ys), dtype=float)
        if n == "dss":
            v = P.var()
            if not v > 0:
                raise DegenerateDistribution("Dawid-Sebastiani score needs a positive forecast variance")
            return -((ys - P.mean()) ** 2) / (2 * v) - 0.5 * math.log(v)
        k = self.kernel
        e_pp = expectations(k, P, P.mean(), budget, rng).e_pp
        e_py = e_py_many(k, P, ys, budget, rng.spawn(rng.stream_id + 1) if rng else None)
        if n in ("crps", "rcrps", "kernel"):
            return 0.5 * e_pp - e_py
        if self.is_scaled:
            if not e_pp > 0:
                raise DegenerateDistribution("scaled score undefined for a degenerate forecast")
            return -e_py / e_pp - 0.5 * math.log(e_pp)
        return _generalized_from(self.h, e_pp, e_py)

    def entropy(self, P, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None,
                unbiased=False) -> ScoreValue:
        """H(P) = S(P, P), the expected score of P under itself."""
        n = self.name
        if isinstance(P, LocationScale):
            P = P.simplify()
        if n == "logs":
            method = "exact_sum" if isinstance(P, NegBin) else "analytic"
            return ScoreValue(_log_entropy(P), method)
        if n == "dss":
            v = P.var()
            if not v > 0:
                raise DegenerateDistribution("Dawid-Sebastiani score needs a positive forecast variance")
            return ScoreValue(-0.5 - 0.5 * math.log(v))
        if isinstance(P, Gaussian) and n == "crps":
            return ScoreValue(-P.sigma / SQRT_PI)
        ex = expectations(self.kernel, P, P.mean(), budget, rng, unbiased)
        e_pp = ex.e_pp
        if n in ("crps", "rcrps", "kernel"):
            return ScoreValue(-0.5 * e_pp, ex.method, 0.5 * ex.e_pp_se)
        if self.is_scaled:
            if not e_pp > 0:
                raise DegenerateDistribution("scaled score undefined for a degenerate forecast")
            return ScoreValue(-1.0 - 0.5 * math.log(e_pp), ex.method, 0.5 * ex.e_pp_se / e_pp)
        if self.h.needs_positive and not e_pp > 0:
            raise DegenerateDistribution("E_{P,P} g(X, Y) = 0; use HFunction.shifted_log(gamma)")
        return ScoreValue(float(self.h(e_pp)), ex.method, abs(self.h.deriv(e_pp)) * ex.e_pp_se)

    def expected_gaussian(self, mu_hat, sigma_hat, mu, sigma):
        """E_{Y ~ N(mu, sigma^2)} S(N(mu_hat, sigma_hat^2), Y); vectorized."""
        n = self.name
        if n == "crps":
            return expected_crps_gaussian(mu_hat, sigma_hat, mu, sigma)
        if n == "scrps":
            return expected_scrps_gaussian(mu_hat, sigma_hat, mu, sigma)
        if n == "rcrps":
            return expected_rcrps_gaussian(mu_hat, sigma_hat, mu, sigma, self.c)
        if n == "rscrps":
            return expected_rscrps_gaussian(mu_hat, sigma_hat, mu, sigma, self.c)
        if n == "logs":
            return expected_logs_gaussian(mu_hat, sigma_hat, mu, sigma)
        if n == "dss":
            return expected_dss_gaussian(mu_hat, sigma_hat, mu, sigma)
        # kernel rules are affine in e_py, and X - Y ~ N(mu_hat - mu, sigma_hat^2 + sigma^2)
        k = self.kernel
        mh, sh, m, s = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mu_hat, sigma_hat, mu, sigma)))
        out = np.empty(mh.shape)
        for idx in np.ndindex(mh.shape):
            sd = math.hypot(sh[idx], s[idx])
            md = mh[idx] - m[idx]
            if k.trunc is None:
                e_pp = gaussian_abs_moment(0.0, _SQRT2 * sh[idx], k.alpha)
                e_py = gaussian_abs_moment(md, sd, k.alpha)
            else:
                e_pp = e_function(0.0, _SQRT2 * sh[idx], k.trunc)
                e_py = e_function(md, sd, k.trunc)
            out[idx] = 0.5 * e_pp - e_py if n == "kernel" else _generalized_from(self.h, e_pp, e_py)
        return out if out.ndim else float(out)


def parse_rule(text) -> Rule:
    """Parse ``name[:key=value[:key=value...]]``.

    Examples: ``crps``, ``rcrps:c=2``, ``kernel:alpha=0.5``,
    ``genkernel:h=shifted_log:gamma=0.1:alpha=1``.
    """
    if isinstance(text, Rule):
        return text
    parts = [p.strip() for p in str(text).strip().split(":") if p.strip()]
    if not parts:
        raise ValueError("empty rule specification")
    name, opts = parts[0].lower(), {}
    for p in parts[1:]:
        if "=" not in p:
            raise ValueError(f"malformed rule option {p!r} in {text!r}")
        key, val = p.split("=", 1)
        opts[key.strip().lower()] = val.strip()
    unknown = set(opts) - {"c", "alpha", "h", "gamma"}
    if unknown:
        raise ValueError(f"unknown rule options {sorted(unknown)} in {text!r}")
    h = None
    if "h" in opts:
        tag = opts["h"]
        h = HFunction(tag, float(opts.get("gamma", 0.0))) if tag == "shifted_log" else HFunction(tag)
    elif "gamma" in opts:
        raise ValueError("gamma given without h=shifted_log")
    c = float(opts["c"]) if "c" in opts else None
    return Rule(name, c=c, alpha=float(opts.get("alpha", 1.0)), h=h)


def expected_gaussian_score(rule, forecast: Gaussian, truth: Gaussian):
    """Expected score of a Gaussian forecast when Y follows a Gaussian truth."""
    return float(parse_rule(rule).expected_gaussian(forecast.mu, forecast.sigma, truth.mu, truth.sigma))


def transform_score(rule, P, y, budget: Optional[MCBudget] = None, rng: Optional[RngStream] = None) -> ScoreValue:
    """S(P, y) / |S(P, P)| - log |S(P, P)| for a negative-valued proper score S.

    ``rule`` is a Rule, a rule string, or a pair of callables
    ``(score(P, y), entropy(P))``.

    Raises
    ------
    SignError
        If S(P, y) or S(P, P) is not strictly negative.
    """
    if isinstance(rule, tuple):
        score_fn, entropy_fn = rule
        s_py, s_pp = ScoreValue(float(score_fn(P, y))), ScoreValue(float(entropy_fn(P)))
    else:
        r = parse_rule(rule)
        s_py = r.score(P, y, budget=budget, rng=rng)
        s_pp = r.entropy(P, budget=budget, rng=rng.spawn(rng.stream_id + 1) if rng else None)
    if not s_py.value < 0:
        raise SignError(f"transform_score needs S(P, y) < 0, got {s_py.value}")
    if not s_pp.value < 0:
        raise SignError(f"transform_score needs S(P, P) < 0, got {s_pp.value}")
    a = abs(s_pp.value)
    value = s_py.value / a - math.log(a)
    se = math.hypot(s_py.se / a, (s_py.value / a**2 + 1 / a) * s_pp.se) if (s_py.se or s_pp.se) else 0.0
    method = s_py.method if s_pp.method == "analytic" else s_pp.method
    return ScoreValue(value, method, se)


# ------------------------------------------------------------------- reports


@dataclass(frozen=True)
class ScoreReport:
    """Per-observation scores, entropies H(P_i) and residuals S(P_i, y_i) - H(P_i)."""

    rule: str
    scores: np.ndarray
    entropies: np.ndarray
    methods: tuple = field(default=())

    @property
    def residuals(self):
        return self.scores - self.entropies

    @property
    def n(self):
        return int(self.scores.size)

    @property
    def average(self):
        return float(np.mean(self.scores))

    @property
    def average_entropy(self):
        return float(np.mean(self.entropies))

    @property
    def average_residual(self):
        return float(np.mean(self.residuals))


def average_score(rule, dataset: Sequence, budget: Optional[MCBudget] = None, seed=0) -> ScoreReport:
    """Average score (1/n) sum_i S(P_i, y_i) over ``dataset = [(P_i, y_i), ...]``.

    Monte Carlo paths draw from ``RngStream(seed, i)`` for observation ``i``,
    so results do not depend on evaluation order. Any per-observation failure
    is re-raised as ``ObservationError`` carrying the index.
    """
    r = parse_rule(rule)
    if len(dataset) < 1:
        raise ValueError("average_score needs at least one observation")
    scores, ents, methods = [], [], []
    for i, (P, y) in enumerate(dataset):
        try:
            s = r.score(P, y, budget=budget, rng=RngStream(seed, 2 * i))
            h = r.entropy(P, budget=budget, rng=RngStream(seed, 2 * i + 1))
        except Exception as exc:
            raise ObservationError(i, exc) from exc
        scores.append(s.value)
        ents.append(h.value)
        methods.append(s.method)
    return ScoreReport(r.label, np.asarray(scores), np.asarray(ents), tuple(methods))
