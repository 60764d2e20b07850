import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, special, stats

from properscores.distributions import NegBin
from properscores.exceptions import ExperimentError, NonConvergence
from properscores.experiments import checks
from properscores.experiments.config import (
    EntropyConfig,
    NbRegConfig,
    OutlierConfig,
    SpatialConfig,
    SurfaceConfig,
    VolatilityConfig,
    config_from_dict,
    config_to_dict,
    load_config,
)
from properscores.experiments.entropy import entropy_decomposition_trace
from properscores.experiments.io import fmt, read_csv, write_csv, write_json
from properscores.experiments.nbreg import (
    NegativeBinomialRegressor,
    fit_negbin,
    negbin_loglik,
    run_nbreg,
    simulate_nbreg,
    topk_curve,
)
from properscores.experiments.selection import SelectionCurve, true_model_wins, wilson_interval
from properscores.experiments.spatial import (
    LeaveOneOutKriging,
    covariance_matrix,
    loo_kriging,
    matern_cov,
    run_spatial,
    simulate_field,
)
from properscores.experiments.surfaces import asymmetry, expected_average, expected_score_surfaces, gap_ratio
from properscores.experiments.volatility import run_volatility, simulate_volatility
from properscores.numerics import RngStream

# --------------------------------------------------------------- selection


def test_wilson_interval_formula():
    k, n, z = 37, 50, stats.norm.ppf(0.975)
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert wilson_interval(k, n) == pytest.approx((centre - half, centre + half), rel=1e-10)


def test_true_model_wins_ties_lose():
    assert true_model_wins([1.0, 0.5, 0.9])
    assert not true_model_wins([1.0, 1.0, 0.9])
    np.testing.assert_array_equal(true_model_wins(np.array([[2.0, 1.0], [1.0, 2.0]])), [True, False])


def test_selection_curve():
    c = SelectionCurve()
    c.add("crps", 0.1, 30, 40, "clean")
    r = c.get("crps", 0.1, "clean")
    assert r.prob_correct == 0.75
    lo, hi = r.interval
    assert r.wilson_halfwidth == pytest.approx((hi - lo) / 2)
    assert len(c.table()[0]) == len(c.header)
    with pytest.raises(KeyError):
        c.get("crps", 0.2)


# ----------------------------------------------------------------- configs


@pytest.mark.parametrize("name,cls", [("volatility", VolatilityConfig), ("spatial", SpatialConfig),
                                      ("nbreg", NbRegConfig), ("surface", SurfaceConfig), ("entropy", EntropyConfig)])
def test_shipped_configs_match_defaults(name, cls):
    expected = cls()
    if name == "entropy":
        expected = EntropyConfig(volatility=VolatilityConfig(series_len=2000, replicates=1, seed=20240604))
    assert load_config(name) == expected


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        config_from_dict("volatility", {"bogus": 1})
    with pytest.raises(ValueError):
        VolatilityConfig(a=1.0)
    with pytest.raises(ValueError):
        OutlierConfig(count=0)
    p = tmp_path / "v.toml"
    p.write_text("[volatility]\nreplicates = 7\ndelta_grid = [0.1, 0.2]\n")
    cfg = load_config("volatility", str(p))
    assert cfg.replicates == 7 and cfg.delta_grid == (0.1, 0.2)
    assert config_to_dict(cfg)["replicates"] == 7


# -------------------------------------------------------------- volatility


def test_volatility_series_is_ar1():
    cfg = VolatilityConfig(series_len=20000)
    x, y = simulate_volatility(cfg, RngStream(1, 0))
    a_hat = np.dot(x[1:], x[:-1]) / np.dot(x[:-1], x[:-1])
    assert a_hat == pytest.approx(0.95, abs=0.01)
    assert np.var(x) == pytest.approx(0.25 / (1 - 0.95**2), rel=0.15)
    assert np.std(y / np.exp(x)) == pytest.approx(1.0, rel=0.02)


def test_volatility_small_run_deterministic():
    cfg = VolatilityConfig(replicates=10, series_len=200, delta_grid=(0.1, 0.4))
    a, b = run_volatility(cfg), run_volatility(cfg)
    assert a.table() == b.table()
    assert all(0 <= r.successes <= 10 for r in a.rows)


def test_experiment_error_carries_replicate(monkeypatch):
    from properscores.experiments import volatility

    calls = []

    def flaky(cfg, rng):
        calls.append(rng.stream_id)
        if len(calls) == 2:
            raise FloatingPointError("boom")
        return simulate_volatility(cfg, rng)

    monkeypatch.setattr(volatility, "simulate_volatility", flaky)
    with pytest.raises(ExperimentError) as info:
        run_volatility(VolatilityConfig(replicates=3, series_len=10))
    assert info.value.replicate == 1


# ----------------------------------------------------------------- spatial


def test_matern_closed_forms():
    h = np.array([0.0, 0.01, 0.05, 0.2])
    np.testing.assert_allclose(matern_cov(h, 50.0, 2.0, 0.5), 4.0 * np.exp(-50 * h), rtol=1e-14)
    x = 50 * h
    np.testing.assert_allclose(matern_cov(h, 50.0, 1.0, 1.5), (1 + x) * np.exp(-x), rtol=1e-14)
    # general order against the textbook formula
    hp = h[1:]
    xp = 50 * hp
    ref = 1.0 / (2**2 * special.gamma(3.0)) * xp**3 * special.kv(3.0, xp)
    np.testing.assert_allclose(matern_cov(hp, 50.0, 1.0, 3.0), ref, rtol=1e-12)
    assert matern_cov(0.0, 50.0, 1.3, 3.0) == pytest.approx(1.69)
    # continuity of the general path into a half-integer order
    assert matern_cov(0.03, 50.0, 1.0, 1.5 + 1e-9) == pytest.approx(matern_cov(0.03, 50.0, 1.0, 1.5), rel=1e-7)
    with pytest.raises(ValueError):
        matern_cov(-1.0)


def test_loo_kriging_brute_force():
    rng = np.random.default_rng(0)
    locs = rng.uniform(size=(5, 2))
    y = rng.normal(size=5)
    mu, sd = loo_kriging(locs, y, kappa=5.0, sigma=1.2, nu=1.5)
    S = covariance_matrix(locs, 5.0, 1.2, 1.5)
    for i in range(5):
        o = [j for j in range(5) if j != i]
        c = S[i, o]
        w = np.linalg.solve(S[np.ix_(o, o)], c)
        assert mu[i] == pytest.approx(w @ y[o], rel=1e-9, abs=1e-12)
        assert sd[i] ** 2 == pytest.approx(S[i, i] - c @ w, rel=1e-9)


def test_kriging_estimator():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(30, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1]
    m = LeaveOneOutKriging(kappa=3.0, nu=2.5).fit(X, y)
    mean, std = m.predict(X[:3], return_std=True)
    np.testing.assert_allclose(mean, y[:3], atol=1e-6)
    assert np.all(std < 1e-3)
    assert len(m.loo_distributions()) == 30
    assert np.isfinite(m.score())
    assert m.get_params()["kappa"] == 3.0


def test_field_covariance():
    cfg = SpatialConfig(kappa=5.0, nu=1.5, delta_grid=(2.0,))
    locs = np.array([[0.0, 0.0], [0.1, 0.0], [0.5, 0.5]])
    draws = np.array([simulate_field(locs, cfg, RngStream(9, i)) for i in range(4000)])
    emp = np.cov(draws.T)
    np.testing.assert_allclose(emp, covariance_matrix(locs, 5.0, 1.0, 1.5), atol=0.08)


def test_spatial_small_run():
    cfg = SpatialConfig(n_obs=30, replicates=3, delta_grid=(10.0,))
    curve = run_spatial(cfg)
    assert {r.variant for r in curve.rows} == {"clean", "outlier"}
    assert curve.table() == run_spatial(cfg).table()
    names = [c[0] for c in checks.check_spatial(curve, cfg)]
    assert len(names) == 3


# ------------------------------------------------------------------ nbreg


def test_negbin_loglik_matches_scipy():
    y = np.array([0.0, 3.0, 10.0])
    mu = np.array([1.0, 2.5, 8.0])
    ref = stats.nbinom(2.0, 2.0 / (2.0 + mu)).logpmf(y).sum()
    assert negbin_loglik(y, mu, 2.0) == pytest.approx(ref, rel=1e-12)


def test_fit_matches_generic_optimizer():
    cfg = NbRegConfig(n_obs=400, k_covariates=2, intercept=1.0, linpred_sd=0.5, s=3.0, seed=5)
    X, y, _ = simulate_nbreg(cfg, RngStream(5, 0))
    D = np.column_stack([np.ones(len(y)), X])
    fit = fit_negbin(D, y)

    def nll(p):
        return -stats.nbinom(np.exp(p[-1]), np.exp(p[-1]) / (np.exp(p[-1]) + np.exp(D @ p[:-1]))).logpmf(y).sum()

    opt = optimize.minimize(nll, np.zeros(D.shape[1] + 1), method="Nelder-Mead",
                            options=dict(xatol=1e-9, fatol=1e-10, maxiter=20000, maxfev=20000))
    np.testing.assert_allclose(fit.theta, opt.x[:-1], atol=1e-4)
    assert math.log(fit.s) == pytest.approx(opt.x[-1], abs=1e-3)
    assert fit.loglik >= -opt.fun - 1e-8


def test_nb_regressor_recovers_truth():
    cfg = NbRegConfig(n_obs=3000, k_covariates=3, intercept=2.0, linpred_sd=0.6, s=4.0, seed=11)
    X, y, _ = simulate_nbreg(cfg, RngStream(11, 0))
    m = NegativeBinomialRegressor().fit(X, y)
    truth = np.concatenate([[2.0], cfg.coefficients()])
    est = np.concatenate([[m.intercept_], m.coef_])
    assert np.all(np.abs(est - truth) < 4 * m.bse_)
    assert m.dispersion_ == pytest.approx(4.0, rel=0.2)
    assert isinstance(m.predict_distribution(X[:1])[0], NegBin)
    assert np.isfinite(m.score(X[:50], y[:50]))


def test_nb_nonconvergence():
    cfg = NbRegConfig(n_obs=200, k_covariates=2, seed=1)
    X, y, _ = simulate_nbreg(cfg, RngStream(1, 0))
    with pytest.raises(NonConvergence) as info:
        fit_negbin(np.column_stack([np.ones(len(y)), X]), y, max_iter=1)
    assert info.value.last_iterate is not None


def test_topk_curve():
    np.testing.assert_allclose(topk_curve([1.0, 3.0]), [0.5, 1.0])


def test_nbreg_run_shape():
    res = run_nbreg(NbRegConfig(n_obs=200, k_covariates=3))
    assert np.all(np.diff(res.mu_hat) >= 0)
    assert res.topk_crps[-1] == pytest.approx(1.0)
    assert len(res.table()) == 200


# ----------------------------------------------------------------- surfaces


def test_surfaces():
    cfg = SurfaceConfig(n_grid=21)
    s = expected_score_surfaces(cfg)
    assert s.ratio_grid[10] == 1.0 and s.p_grid[10] == 0.5
    assert asymmetry(s.sigma["scrps"]) < 1e-10
    assert asymmetry(s.mu["logs"]) < 1e-10
    assert asymmetry(s.sigma["crps"]) > 0.5
    assert gap_ratio("crps", 0.1, 1.0) == pytest.approx(10.0, rel=1e-9)
    assert gap_ratio("scrps", 0.1, 1.0) == pytest.approx(1.0, rel=1e-9)
    v = expected_average("logs", 0.0, 0.1, 0.0, 1.0, 0.1, 1.0)
    ref = 0.5 * ((-0.5 * math.log(2 * math.pi * 0.01) - 0.5) + (-0.5 * math.log(2 * math.pi) - 0.5))
    assert v == pytest.approx(ref, rel=1e-12)


# ----------------------------------------------------------------- entropy


def test_entropy_trace():
    cfg = EntropyConfig(volatility=VolatilityConfig(series_len=300, replicates=1))
    tr = entropy_decomposition_trace(cfg)
    np.testing.assert_allclose(tr.entropy["crps"], -tr.sd / math.sqrt(math.pi), rtol=1e-13)
    np.testing.assert_allclose(tr.entropy["logs"], -0.5 * np.log(2 * math.pi * math.e * tr.sd**2), rtol=1e-12)
    np.testing.assert_allclose(tr.score["scrps"], tr.entropy["scrps"] + tr.residual("scrps"))
    assert all(p for _, p, _ in checks.check_entropy(tr))


# ---------------------------------------------------------------------- io


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("io") / "x.csv"
    write_csv(str(path), ("i", "v"), list(enumerate(values)))
    header, rows = read_csv(str(path))
    assert header == ["i", "v"]
    assert [float(r[1]) for r in rows] == values


def test_fmt_and_json(tmp_path):
    assert fmt(True) == "true" and fmt(3) == "3" and fmt(0.1) == "0.10000000000000001"
    p = tmp_path / "a.json"
    write_json(str(p), {"x": np.float64(1.5), "n": np.int64(2), "arr": np.arange(2)})
    text = p.read_text()
    assert '"version": "v0.1.0"' in text and text.endswith("\n")
