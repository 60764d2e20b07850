import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from properscores.distributions import Ensemble, Gaussian, Laplace, LocationScale, NegBin
from properscores.exceptions import (
    DegenerateDistribution,
    ObservationError,
    SignError,
    SupportError,
    UnsupportedDistribution,
)
from properscores.kernels import CRPS_KERNEL, KernelSpec, MCBudget
from properscores.numerics import RngStream
from properscores.scores import (
    HFunction,
    Rule,
    average_score,
    crps,
    crps_gaussian,
    dss,
    expected_gaussian_score,
    generalized_kernel_score,
    kernel_score,
    log_score,
    parse_rule,
    rcrps,
    robust_scores,
    rscrps,
    scrps,
    scrps_gaussian,
    transform_score,
)

ALL_RULES = ["crps", "scrps", "logs", "dss", "rcrps:c=2", "rscrps:c=0.5", "kernel:alpha=0.5",
             "genkernel:h=log", "genkernel:h=sqrt:alpha=1.5", "genkernel:h=shifted_log:gamma=0.1"]


def crps_by_cdf_integral(cdf, y, lo, hi):
    """-int (F(x) - 1{x >= y})^2 dx, the threshold form of the CRPS."""
    left, _ = integrate.quad(lambda x: cdf(x) ** 2, lo, y, limit=400, epsabs=1e-13)
    right, _ = integrate.quad(lambda x: (1 - cdf(x)) ** 2, y, hi, limit=400, epsabs=1e-13)
    return -(left + right)


def gauss_e_abs(mu, sigma, y, c=None):
    f = (lambda x: abs(x - y)) if c is None else (lambda x: min(abs(x - y), c))
    lo, hi = mu - 40 * sigma, mu + 40 * sigma
    kinks = (y,) if c is None else (y, y - c, y + c)
    pts = [p for p in kinks + (mu,) if lo < p < hi]
    v, _ = integrate.quad(lambda x: f(x) * stats.norm.pdf(x, mu, sigma), lo, hi, points=pts or None,
                          limit=400, epsabs=1e-14)
    return v


@pytest.mark.parametrize("mu,sigma,y", [(0.0, 1.0, 0.0), (2.0, 0.5, -1.0), (-3.0, 4.0, 10.0)])
def test_crps_gaussian_threshold_form(mu, sigma, y):
    ref = crps_by_cdf_integral(stats.norm(mu, sigma).cdf, y, mu - 40 * sigma, mu + 40 * sigma)
    assert crps_gaussian(mu, sigma, y) == pytest.approx(ref, rel=1e-8)


def test_crps_laplace_threshold_form():
    d = Laplace(1.0, 2.0)
    ref = crps_by_cdf_integral(stats.laplace(1.0, 2.0).cdf, 3.5, -80, 80)
    assert crps(d, 3.5).value == pytest.approx(ref, rel=1e-8)


def test_crps_negbin_step_form():
    d = NegBin(4.0, 2.0)
    k = np.arange(0, 400)
    F = stats.nbinom(2.0, 2.0 / 6.0).cdf(k)
    for y in (0, 3, 11):
        assert crps(d, y).value == pytest.approx(-np.sum((F - (k >= y)) ** 2), rel=1e-10)
    # the kernel form must agree with the step form
    kg = kernel_score(KernelSpec(1.0, 1e9), d, 3)
    assert kg.value == pytest.approx(crps(d, 3).value, rel=1e-9)


def test_crps_ensemble_pairwise():
    x = np.array([0.1, 1.5, -0.7, 2.2])
    ref = 0.5 * np.abs(x[:, None] - x[None, :]).mean() - np.abs(x - 0.4).mean()
    assert crps(Ensemble(x), 0.4).value == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("mu,sigma,y", [(0.0, 1.0, 0.3), (1.0, 0.2, 3.0), (-2.0, 3.0, -2.5)])
def test_scrps_gaussian_from_expectations(mu, sigma, y):
    e_pp = 2 * sigma / math.sqrt(math.pi)
    ref = -gauss_e_abs(mu, sigma, y) / e_pp - 0.5 * math.log(e_pp)
    assert scrps(Gaussian(mu, sigma), y).value == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_robust_gaussian_from_expectations(c):
    mu, sigma, y = 0.4, 1.3, 2.9
    e_pp = gauss_e_abs(0.0, math.sqrt(2) * sigma, 0.0, c)
    e_py = gauss_e_abs(mu, sigma, y, c)
    r, rs = robust_scores(c, Gaussian(mu, sigma), y)
    assert r.value == pytest.approx(0.5 * e_pp - e_py, rel=1e-9)
    assert rs.value == pytest.approx(-e_py / e_pp - 0.5 * math.log(e_pp), rel=1e-9)
    assert rcrps(c, Gaussian(mu, sigma), y).value == r.value
    assert rscrps(c, Gaussian(mu, sigma), y).value == rs.value


def test_log_score_and_dss():
    assert log_score(Gaussian(1.0, 2.0), 0.0).value == pytest.approx(stats.norm(1, 2).logpdf(0), rel=1e-14)
    assert log_score(NegBin(3.0, 2.0), 4).value == pytest.approx(stats.nbinom(2, 0.4).logpmf(4), rel=1e-12)
    assert dss(Gaussian(1.0, 2.0), 0.0).value == pytest.approx(-1 / 8 - math.log(2.0), rel=1e-14)
    assert dss(Laplace(0.0, 1.0), 1.0).value == pytest.approx(-1 / 4 - 0.5 * math.log(2.0), rel=1e-14)
    with pytest.raises(UnsupportedDistribution):
        log_score(Ensemble([1.0, 2.0]), 1.0)
    with pytest.raises(SupportError):
        log_score(NegBin(3.0, 2.0), 0.5)


def test_generalized_special_cases():
    P, y = Gaussian(0.3, 1.7), -0.4
    assert generalized_kernel_score(HFunction.linear(), CRPS_KERNEL, P, y).value == crps(P, y).value
    std = generalized_kernel_score(HFunction.log(), CRPS_KERNEL, P, y).value
    # h = -1/2 log is the scaled score shifted by one
    assert std == pytest.approx(scrps(P, y).value + 1.0, rel=1e-12)
    h = HFunction.shifted_log(0.1)
    assert h(1.0) == pytest.approx(-0.5 * math.log(1.1))
    assert h.deriv(1.0) == pytest.approx(-0.5 / 1.1)


def test_degenerate_forecasts():
    point = Ensemble([2.0, 2.0, 2.0])
    with pytest.raises(DegenerateDistribution):
        scrps(point, 1.0)
    with pytest.raises(DegenerateDistribution):
        generalized_kernel_score(HFunction.log(), CRPS_KERNEL, point, 1.0)
    v = generalized_kernel_score(HFunction.shifted_log(0.1), CRPS_KERNEL, point, 1.0).value
    assert v == pytest.approx(-0.5 * math.log(0.1) - 1 / 0.1, rel=1e-12)
    assert crps(point, 1.0).value == -1.0


def test_location_scale_laplace_matches_closed_form():
    P = LocationScale(Laplace(0.0, 1.0), 0.5, 2.0)
    assert scrps(P, 1.2).value == pytest.approx(scrps(Laplace(0.5, 2.0), 1.2).value, rel=1e-12)


def test_monte_carlo_scrps_within_four_se():
    # alpha-1 kernel on a Laplace base has a closed form; compare the MC path against it
    from properscores.kernels import expectations

    P, y = Laplace(0.5, 2.0), 1.2
    ex = expectations(CRPS_KERNEL, P, y, MCBudget(400_000), RngStream(3, 0), force_mc=True)
    exact = expectations(CRPS_KERNEL, P, y)
    assert abs(ex.e_py - exact.e_py) < 4 * ex.e_py_se
    assert abs(ex.e_pp - exact.e_pp) < 4 * ex.e_pp_se


def test_parse_rule_roundtrip_and_errors():
    r = parse_rule("rcrps:c=2")
    assert (r.name, r.c, r.label) == ("rcrps", 2.0, "rcrps(c=2)")
    g = parse_rule("genkernel:h=shifted_log:gamma=0.1")
    assert g.h == HFunction.shifted_log(0.1)
    assert parse_rule(r) is r
    for bad in ("nope", "rcrps", "crps:c=2", "kernel:alpha=3", "genkernel", "logs:alpha=2", "rcrps:c=-1"):
        with pytest.raises(ValueError):
            parse_rule(bad)


@pytest.mark.parametrize("rule", ALL_RULES)
def test_entropy_is_self_expectation(rule):
    r = parse_rule(rule)
    P = Gaussian(0.7, 1.9)
    h = r.entropy(P).value
    assert h == pytest.approx(float(r.expected_gaussian(P.mu, P.sigma, P.mu, P.sigma)), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("rule", ["crps", "scrps", "rcrps:c=1", "rscrps:c=1", "logs", "dss", "genkernel:h=log"])
def test_expected_gaussian_by_quadrature(rule):
    r = parse_rule(rule)
    f = lambda y: r.score(Gaussian(0.4, 0.8), y).value
    ref, _ = integrate.quad(lambda y: f(y) * stats.norm.pdf(y, -0.2, 1.3), -12, 12, limit=200)
    assert expected_gaussian_score(r, Gaussian(0.4, 0.8), Gaussian(-0.2, 1.3)) == pytest.approx(ref, rel=1e-7)


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-10, 10))
def test_score_many_matches_score(mu, sigma, y):
    for rule in ("crps", "scrps", "rscrps:c=2", "logs", "kernel:alpha=0.5"):
        r = parse_rule(rule)
        many = r.score_many(Gaussian(mu, sigma), np.array([y]))[0]
        assert many == pytest.approx(r.score(Gaussian(mu, sigma), y).value, rel=1e-9, abs=1e-12)


def test_score_many_non_gaussian():
    d = Laplace(0.2, 1.1)
    ys = np.array([-1.0, 0.5, 4.0])
    for rule in ("crps", "scrps", "logs", "dss", "genkernel:h=sqrt"):
        r = parse_rule(rule)
        np.testing.assert_allclose(r.score_many(d, ys), [r.score(d, y).value for y in ys], rtol=1e-10)


def test_transform_score_identity():
    P = Gaussian(0.2, 1.5)
    for y in (-1.0, 0.2, 3.0):
        t = transform_score("crps", P, y).value
        assert t == pytest.approx(2 * scrps(P, y).value + 1 + math.log(2), rel=1e-12)
    custom = transform_score((lambda P, y: -abs(y) - 1.0, lambda P: -2.0), P, 1.0).value
    assert custom == pytest.approx(-1.0 - math.log(2.0))
    with pytest.raises(SignError):
        transform_score("logs", Gaussian(0.0, 0.01), 0.0)


@given(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-3, 3), st.floats(0.2, 3))
def test_propriety_pointwise(mh, sh, mu, sigma):
    for rule in ALL_RULES:
        r = parse_rule(rule)
        assert r.expected_gaussian(mh, sh, mu, sigma) <= r.expected_gaussian(mu, sigma, mu, sigma) + 1e-10


@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.01, 100))
def test_scale_invariance_of_score_differences(mu, sigma, y, lam):
    # scrps and logs differences are unchanged by rescaling forecast and outcome
    P1, P2 = Gaussian(mu, sigma), Gaussian(mu + 0.3, 1.5 * sigma)
    Q1, Q2 = Gaussian(lam * mu, lam * sigma), Gaussian(lam * (mu + 0.3), lam * 1.5 * sigma)
    for rule in ("scrps", "logs", "dss"):
        r = parse_rule(rule)
        d1 = r(P1, y) - r(P2, y)
        d2 = r(Q1, lam * y) - r(Q2, lam * y)
        assert d2 == pytest.approx(d1, rel=1e-8, abs=1e-8)
    # crps differences scale linearly
    c = parse_rule("crps")
    assert c(Q1, lam * y) - c(Q2, lam * y) == pytest.approx(lam * (c(P1, y) - c(P2, y)), rel=1e-7, abs=1e-9)


def test_average_score_report():
    data = [(Gaussian(0.0, 1.0), 0.5), (Gaussian(1.0, 2.0), -1.0)]
    rep = average_score("scrps", data)
    assert rep.n == 2
    assert rep.average == pytest.approx(np.mean([scrps(P, y).value for P, y in data]))
    np.testing.assert_allclose(rep.residuals, rep.scores - rep.entropies)
    assert rep.methods == ("analytic", "analytic")
    with pytest.raises(ObservationError) as info:
        average_score("logs", data + [(Ensemble([1.0, 2.0]), 1.0)])
    assert info.value.index == 2
    with pytest.raises(ValueError):
        average_score("crps", [])


def test_rule_call_and_location_scale():
    r = Rule("crps")
    ls = LocationScale(Gaussian(), 1.0, 2.0)
    assert r(ls, 0.0) == pytest.approx(crps_gaussian(1.0, 2.0, 0.0))
    assert r.kernel == CRPS_KERNEL
    assert Rule("rscrps", c=2).is_scaled


def test_vectorized_closed_forms():
    mu = np.array([0.0, 1.0])
    out = scrps_gaussian(mu, 1.0, 0.5)
    assert out.shape == (2,)
    assert out[0] == pytest.approx(scrps(Gaussian(0.0, 1.0), 0.5).value)
