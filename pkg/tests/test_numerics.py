import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from properscores.exceptions import NotPositiveDefinite
from properscores.numerics import (
    RngStream,
    SymMatrix,
    bessel_k,
    bessel_k_half,
    chol_solve,
    cholesky,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_ppf,
)


def test_normal_cdf_against_erfc():
    for x in (-8.0, -1.3, 0.0, 0.7, 5.0):
        assert std_normal_cdf(x) == pytest.approx(0.5 * math.erfc(-x / math.sqrt(2)), rel=1e-14)


def test_normal_pdf_value():
    assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


@given(st.floats(1e-12, 1 - 1e-12))
def test_ppf_inverts_cdf(u):
    assert std_normal_cdf(std_normal_ppf(u)) == pytest.approx(u, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 3.0, 20.0])
def test_bessel_half_integer_closed_forms(x):
    k12 = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
    assert bessel_k(0.5, x) == pytest.approx(k12, rel=1e-12)
    assert bessel_k(1.5, x) == pytest.approx(k12 * (1 + 1 / x), rel=1e-12)
    assert bessel_k(2.5, x) == pytest.approx(k12 * (1 + 3 / x + 3 / x**2), rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
def test_bessel_half_series_matches_general(n):
    x = np.array([0.05, 0.8, 4.0, 30.0])
    np.testing.assert_allclose(bessel_k_half(n, x), bessel_k(n + 0.5, x), rtol=1e-11)


def test_bessel_recurrence():
    # K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
    x, nu = 1.7, 2.3
    assert bessel_k(nu + 1, x) == pytest.approx(bessel_k(nu - 1, x) + 2 * nu / x * bessel_k(nu, x), rel=1e-12)


def test_bessel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
    with pytest.raises(ValueError):
        bessel_k(0.0, 1.0)
    with pytest.raises(ValueError):
        bessel_k_half(-1, 1.0)


def test_cholesky_and_solve():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6))
    spd = a @ a.T + 6 * np.eye(6)
    l = cholesky(spd)
    np.testing.assert_allclose(l @ l.T, spd, atol=1e-12)
    b = rng.normal(size=6)
    np.testing.assert_allclose(spd @ chol_solve(l, b), b, atol=1e-10)


def test_cholesky_errors():
    with pytest.raises(ValueError):
        cholesky(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        chol_solve(np.eye(2), np.ones(3))


def test_cholesky_jitter_rescues_near_singular():
    a = np.diag([1.0, 1.0, -1e-13])
    with pytest.raises(NotPositiveDefinite):
        cholesky(a)
    l = cholesky(a, retry_jitter=True)
    assert np.all(np.isfinite(l))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, -1.0]), retry_jitter=True)


def test_symmatrix_solve():
    m = SymMatrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
    np.testing.assert_allclose(m.solve(np.array([1.0, 2.0])), [1 / 11, 7 / 11], rtol=1e-12)
    assert m.n == 2


def test_rng_streams_reproducible_and_distinct():
    a = RngStream(7, 1).uniform(5)
    b = RngStream(7, 1).uniform(5)
    c = RngStream(7, 2).uniform(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert np.all((a > 0) & (a < 1))


def test_rng_normal_moments():
    x = RngStream(11, 0).normal(200_000, loc=2.0, scale=3.0)
    assert abs(x.mean() - 2.0) < 5 * 3 / math.sqrt(x.size)
    assert x.std() == pytest.approx(3.0, rel=0.01)


def test_spawn_keeps_root():
    s = RngStream(5, 0).spawn(9)
    assert (s.root_seed, s.stream_id) == (5, 9)
