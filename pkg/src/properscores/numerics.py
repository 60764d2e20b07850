"""Special functions, SPD linear algebra and reproducible random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg, special

from .exceptions import NotPositiveDefinite

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_PI = math.sqrt(math.pi)

# 2**53 distinct uniforms on the open unit interval
_U53 = float(2**53)


def std_normal_pdf(x):
    """Standard normal density, vectorized."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """Standard normal CDF, vectorized.

    Evaluated through ``erfc`` so both tails keep full relative precision.
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def std_normal_ppf(u):
    out = special.ndtri(np.asarray(u, dtype=float))
    return out if np.ndim(out) else float(out)


def bessel_k(nu, x):
    """Modified Bessel function of the second kind, K_nu(x), for real order nu > 0.

    Raises
    ------
    ValueError
        If any ``x <= 0`` or ``nu <= 0``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k requires x > 0")
    if nu <= 0:
        raise ValueError("bessel_k requires nu > 0")
    out = special.kv(nu, x)
    return out if out.ndim else float(out)


def bessel_k_half(n, x):
    """K_{n+1/2}(x) from the terminating half-integer series.

    K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_{k=0}^{n} (n+k)! / (k! (n-k)!) (2x)^{-k}
    """
    if n < 0 or int(n) != n:
        raise ValueError("n must be a non-negative integer")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k_half requires x > 0")
    n = int(n)
    total = np.zeros_like(x)
    for k in range(n + 1):
        coef = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        total = total + coef * (2.0 * x) ** (-k)
    out = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) * total
    return out if out.ndim else float(out)


def _check_symmetric(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.max(np.abs(a)), 1e-300)
    if np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")


def cholesky(a, retry_jitter=False):
    """Lower Cholesky factor L with L @ L.T == a.

    With ``retry_jitter`` a failed factorization is retried once after adding
    ``1e-10 * trace(a) / n`` to the diagonal.
    """
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        if not retry_jitter:
            raise NotPositiveDefinite(str(exc)) from exc
    n = a.shape[0]
    jitter = 1e-10 * np.trace(a) / n
    try:
        return np.linalg.cholesky(a + jitter * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"not positive definite after jitter {jitter:g}") from exc


def chol_solve(l, b):
    """Solve (L L^T) x = b given the lower Cholesky factor L."""
    l = np.asarray(l, dtype=float)
    b = np.asarray(b, dtype=float)
    if l.ndim != 2 or l.shape[0] != l.shape[1] or b.shape[0] != l.shape[0]:
        raise ValueError(f"dimension mismatch: L {l.shape}, b {b.shape}")
    return linalg.cho_solve((l, True), b)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(root_seed, stream_id)``.

    The pair is mixed through ``numpy.random.SeedSequence`` into a Philox
    counter-based generator, so streams with different ``stream_id`` are
    independent and each stream is reproducible on its own.
    """

    root_seed: int = 0
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seq = np.random.SeedSequence([int(self.root_seed) & (2**64 - 1), int(self.stream_id) & (2**64 - 1)])
        object.__setattr__(self, "_gen", np.random.Generator(np.random.Philox(seq)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, stream_id):
        """A fresh stream under the same root seed."""
        return RngStream(self.root_seed, stream_id)

    def uniform(self, n):
        """n uniforms strictly inside (0, 1)."""
        k = self._gen.integers(0, 2**53, size=n, dtype=np.int64)
        return (k.astype(float) + 0.5) / _U53

    def normal(self, n, loc=0.0, scale=1.0):
        """Gaussian draws by inverse-CDF of the uniform stream."""
        return loc + scale * special.ndtri(self.uniform(n))


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with a cached Cholesky factor."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        _check_symmetric(a)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    @cached_property
    def factor(self):
        return cholesky(self.entries, retry_jitter=True)

    def solve(self, b):
        return chol_solve(self.factor, b)
