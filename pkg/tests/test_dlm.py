import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import simulate_trend_seasonal
from gdpcast.dlm import (DlmSpec, GibbsChain, TREND_SEASONAL_G, VariancePriors,
                         build_trend_seasonal, default_initial, default_priors, dlm_forecast,
                         ergodic_means, ffbs, gibbs, kalman_filter, kalman_smoother,
                         sample_inverse_gamma, sum_squares)
from gdpcast.errors import InputError, NumericalError
from gdpcast.series import TimeSeries
from oracles import dense_dlm_posterior, random_spec


def scalar_spec(V=1.0, W=1.0, C0=1.0):
    return DlmSpec([1.0], [[1.0]], V, [[W]], [0.0], [[C0]])


def test_scalar_filter_hand_arithmetic():
    res = kalman_filter(scalar_spec(), [2.0])
    # square-root propagation rounds at the last bit
    assert res.R[0, 0, 0] == pytest.approx(2.0, rel=1e-15)
    assert res.Q[0] == pytest.approx(3.0, rel=1e-15)
    assert res.m[0, 0] == pytest.approx(4 / 3, abs=1e-15)
    assert res.C[0, 0, 0] == pytest.approx(2 / 3, abs=1e-15)


def test_noiseless_filter_follows_dynamics():
    G = TREND_SEASONAL_G
    m0 = np.array([10.0, 0.5, 1.0, -0.3, 0.2])
    spec = build_trend_seasonal(m0, np.zeros((5, 5)), 0.0, np.zeros(5))
    # Q_t = 0 here, so filter on a spec with a tiny V instead and compare states
    spec = DlmSpec(spec.F, spec.G, 1e-12, spec.W, m0, spec.C0)
    theta, ys = m0.copy(), []
    for _ in range(12):
        theta = G @ theta
        ys.append(spec.F @ theta)
    res = kalman_filter(spec, ys)
    expected = np.array([np.linalg.matrix_power(G, t) @ m0 for t in range(1, 13)])
    assert_allclose(res.m, expected, atol=1e-9)
    assert_allclose(res.f, ys, atol=1e-9)


def test_degenerate_forecast_variance_raises():
    spec = DlmSpec([1.0], [[1.0]], 0.0, [[0.0]], [0.0], [[0.0]])
    with pytest.raises(NumericalError, match="t=1"):
        kalman_filter(spec, [1.0])


def test_build_trend_seasonal_structure():
    spec = build_trend_seasonal(np.zeros(5), np.eye(5), 1.0, [0.1, 0.2, 0.3, 0, 0])
    assert_array_equal(spec.F, [1, 0, 1, 0, 0])
    assert_array_equal(spec.G[2], [0, 0, -1, -1, -1])
    assert_array_equal(np.diag(spec.W), [0.1, 0.2, 0.3, 0, 0])
    with pytest.raises(InputError):
        build_trend_seasonal(np.zeros(5), np.eye(5), 1.0, [0.1, 0.2, 0.3, 0.1, 0])


def test_seasonal_block_has_period_four():
    state = np.array([0.0, 0.0, 1.5, -0.5, 2.0])
    G4 = np.linalg.matrix_power(TREND_SEASONAL_G, 4)
    assert_allclose(G4 @ state, state, atol=1e-14)


def test_spec_rejects_bad_covariance():
    with pytest.raises(InputError):
        DlmSpec([1.0, 0.0], np.eye(2), 1.0, [[1.0, 0.0], [0.0, -1.0]], [0, 0], np.eye(2))
    with pytest.raises(InputError):
        DlmSpec([1.0, 0.0], np.eye(3), 1.0, np.eye(2), [0, 0], np.eye(2))


def test_filter_loglik_and_smoother_match_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(30):
        F, G, V, W, m0, C0, y = random_spec(rng)
        spec = DlmSpec(F, G, V, W, m0, C0)
        filt = kalman_filter(spec, y)
        sm = kalman_smoother(spec, filt)
        ll, mean, cov = dense_dlm_posterior(F, G, V, W, m0, C0, y)
        assert filt.loglik == pytest.approx(ll, abs=1e-7)
        assert_allclose(sm.s, mean, atol=1e-8)
        p = F.size
        for t in range(y.size + 1):
            assert_allclose(sm.S[t], cov[t * p:(t + 1) * p, t * p:(t + 1) * p], atol=1e-8)


def test_smoother_last_equals_filter():
    rng = np.random.default_rng(3)
    F, G, V, W, m0, C0, y = random_spec(rng, 3, 6)
    spec = DlmSpec(F, G, V, W, m0, C0)
    filt = kalman_filter(spec, y)
    sm = kalman_smoother(spec, filt)
    assert_array_equal(sm.s[-1], filt.m[-1])
    assert_array_equal(sm.S[-1], filt.C[-1])


def test_smoother_without_state_noise_is_deterministic_path():
    G = np.array([[1.0, 1.0], [0.0, 1.0]])
    spec = DlmSpec([1.0, 0.0], G, 0.5, np.zeros((2, 2)), [0.0, 0.0], np.eye(2) * 4)
    y = np.array([1.0, 2.5, 2.9, 4.2, 5.1])
    sm = kalman_smoother(spec, kalman_filter(spec, y))
    for t in range(1, y.size + 1):
        assert_allclose(sm.s[t], G @ sm.s[t - 1], atol=1e-10)


def test_covariances_symmetric_psd_and_smoothing_reduces_variance():
    rng = np.random.default_rng(11)
    for _ in range(500):
        F, G, V, W, m0, C0, y = random_spec(rng)
        spec = DlmSpec(F, G, V, W, m0, C0)
        filt = kalman_filter(spec, y)
        sm = kalman_smoother(spec, filt)
        for M in list(filt.C) + list(filt.R) + list(sm.S):
            assert np.abs(M - M.T).max() <= 1e-10 * max(1.0, np.abs(M).max())
            assert np.linalg.eigvalsh(M).min() >= -1e-8 * max(1.0, np.abs(M).max())
        filtered_diag = np.einsum("tii->ti", filt.C)
        smoothed_diag = np.einsum("tii->ti", sm.S[1:])
        assert np.all(smoothed_diag <= filtered_diag + 1e-10 * np.maximum(1, filtered_diag))
        assert np.all(filt.Q > 0)


def test_singular_predicted_covariance_uses_pseudo_inverse():
    spec = DlmSpec([1.0, 0.0], np.eye(2), 1.0, np.zeros((2, 2)), [0.0, 3.0],
                   np.diag([1.0, 0.0]))
    sm = kalman_smoother(spec, kalman_filter(spec, [1.0, 2.0, 0.5]))
    assert np.all(np.isfinite(sm.s))
    assert_allclose(sm.s[:, 1], 3.0)


def test_ffbs_deterministic_without_noise():
    m0 = np.array([1.0, 0.2, 0.5, -0.5, 0.0])
    spec = build_trend_seasonal(m0, np.zeros((5, 5)), 1.0, np.zeros(5))
    y = np.arange(8.0)
    expected = np.array([np.linalg.matrix_power(TREND_SEASONAL_G, t) @ m0 for t in range(9)])
    for seed in range(3):
        assert_allclose(ffbs(spec, y, seed), expected, atol=1e-12)


def test_ffbs_reproducible():
    rng = np.random.default_rng(0)
    F, G, V, W, m0, C0, y = random_spec(rng, 3, 6)
    spec = DlmSpec(F, G, V, W, m0, C0)
    assert_array_equal(ffbs(spec, y, 42), ffbs(spec, y, 42))


def test_ffbs_moments_match_smoother():
    rng = np.random.default_rng(5)
    F, G, V, W, m0, C0, y = random_spec(rng, 2, 5)
    spec = DlmSpec(F, G, V, W, m0, C0)
    sm = kalman_smoother(spec, kalman_filter(spec, y))
    gen = np.random.default_rng(9)
    draws = np.array([ffbs(spec, y, gen) for _ in range(20000)])
    sd = np.sqrt(np.einsum("tii->ti", sm.S))
    z = (draws.mean(axis=0) - sm.s) / (sd / np.sqrt(draws.shape[0]))
    assert np.abs(z).max() < 4
    t = 2
    emp = np.cov(draws[:, t].T)
    # sampling sd of a covariance entry is about sqrt((S_ii S_jj + S_ij^2) / N)
    S = sm.S[t]
    tol = 5 * np.sqrt((np.outer(np.diag(S), np.diag(S)) + S ** 2) / draws.shape[0])
    assert np.all(np.abs(emp - S) < tol)


def test_inverse_gamma_moments():
    rng = np.random.default_rng(1)
    x = sample_inverse_gamma(3.0, 2.0, rng, size=100_000)
    assert x.mean() == pytest.approx(1.0, abs=0.02)
    assert x.var() == pytest.approx(1.0, abs=0.1)
    a = sample_inverse_gamma(3.0, 2.0, np.random.default_rng(4), size=5)
    b = sample_inverse_gamma(3.0, 2.0, np.random.default_rng(4), size=5)
    assert_array_equal(a, b)
    with pytest.raises(InputError):
        sample_inverse_gamma(0.0, 1.0, rng)


def test_full_conditional_mean():
    # given a fixed path, sigma2 | rest ~ IG(a^2/b + n/2, a/b + SS/2)
    priors = VariancePriors((2.0, 1, 1, 1), (4.0, 1, 1, 1))
    n, ss = 50, np.array([30.0, 1, 1, 1])
    shape, rate = priors.shape(n)[0], priors.rate(ss)[0]
    assert shape == pytest.approx(1.0 + 25.0)
    assert rate == pytest.approx(0.5 + 15.0)
    draws = sample_inverse_gamma(shape, rate, np.random.default_rng(0), size=200_000)
    assert draws.mean() == pytest.approx(rate / (shape - 1), rel=0.01)


def test_sum_squares_matches_definition():
    rng = np.random.default_rng(2)
    spec = build_trend_seasonal(np.zeros(5), np.eye(5), 1.0, [1, 1, 1, 0, 0])
    theta = rng.normal(size=(7, 5))
    y = rng.normal(size=6)
    ss = sum_squares(spec, y, theta)
    ss_y = sum((y[t - 1] - spec.F @ theta[t]) ** 2 for t in range(1, 7))
    ss_1 = sum((theta[t, 0] - (spec.G @ theta[t - 1])[0]) ** 2 for t in range(1, 7))
    assert ss[0] == pytest.approx(ss_y)
    assert ss[1] == pytest.approx(ss_1)


def test_gibbs_bookkeeping_and_reproducibility():
    y = simulate_trend_seasonal(40, (1.0, 0.1, 0.01, 0.05), seed=3)
    a = gibbs(y, n_iter=50, burn_in=10, seed=8)
    b = gibbs(y, n_iter=50, burn_in=10, seed=8)
    assert a.retained.shape == (40, 4)
    assert np.all(a.draws > 0)
    assert a.draws.tobytes() == b.draws.tobytes()
    with pytest.raises(InputError):
        gibbs(y, n_iter=10, burn_in=10)
    with pytest.raises(InputError):
        gibbs(y[:7])


def test_gibbs_default_lengths():
    chain = GibbsChain(np.ones((5000, 4)), 5000, 1000, 0)
    assert chain.retained.shape[0] == 4000


def test_gibbs_tight_priors_dominate_degenerate_data():
    m0 = np.array([10.0, 0.5, 1.0, -0.5, 0.0])
    theta, y = m0.copy(), []
    for _ in range(40):
        theta = TREND_SEASONAL_G @ theta
        y.append(theta[0] + theta[2])
    prior_var = 0.05
    # precision prior mean 1/prior_var, very small relative spread
    a = (1.0, 1 / prior_var, 1 / prior_var, 1 / prior_var)
    b = (1.0, 1e-4 * a[1] ** 2, 1e-4 * a[2] ** 2, 1e-4 * a[3] ** 2)
    chain = gibbs(np.array(y), VariancePriors(a, b), n_iter=600, burn_in=100, seed=1,
                  m0=m0, C0=np.eye(5) * 1e-6)
    shape = a[1] ** 2 / b[1]
    # implied prior on the variance: IG(shape, a/b); mean and sd
    rate = a[1] / b[1]
    mean = rate / (shape - 1)
    sd = mean / np.sqrt(shape - 2)
    post = chain.posterior_mean()[1:]
    assert np.all(np.abs(post - mean) < 2 * sd)


def test_ergodic_means():
    chain = GibbsChain(np.full((30, 4), 2.5), 30, 10, 0)
    assert_allclose(ergodic_means(chain), 2.5)
    rng = np.random.default_rng(0)
    draws = rng.gamma(2.0, size=(100, 4))
    chain = GibbsChain(draws, 100, 20, 0)
    em = ergodic_means(chain)
    assert_array_equal(em[-1], draws[20:].mean(axis=0))


def test_ergodic_means_converge_for_iid_chain():
    rng = np.random.default_rng(3)
    draws = sample_inverse_gamma(5.0, 4.0, rng, size=(4000, 4))
    em = ergodic_means(GibbsChain(draws, 4000, 0, 0))
    se = draws.std(axis=0) / np.sqrt(2000)
    assert np.all(np.abs(em[1999] - em[-1]) < 4 * se)


def test_chain_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    chain = GibbsChain(rng.uniform(0.1, 1, size=(12, 4)), 12, 4, 3)
    path = tmp_path / "chain.csv"
    chain.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,sigma2,sigma2_mu,sigma2_beta,sigma2_gamma"
    assert lines[1].startswith("5,")
    back = GibbsChain.from_csv(path)
    assert_array_equal(back.retained, chain.retained)


def test_dlm_forecast_degenerate_is_deterministic():
    m0 = np.array([10.0, 0.5, 1.0, -0.5, 0.0])
    theta, y = m0.copy(), []
    for _ in range(8):
        theta = TREND_SEASONAL_G @ theta
        y.append(theta[0] + theta[2])
    template = build_trend_seasonal(m0, np.zeros((5, 5)), 0.0, np.zeros(5))
    # V = 0 exactly trips the Q_t floor of the filter; 1e-200 is numerically the same model
    chain = GibbsChain(np.array([[1e-200, 0.0, 0.0, 0.0]]), 1, 0, 0)
    fc = dlm_forecast(template, chain, TimeSeries(y), 6)
    expected = []
    for _ in range(6):
        theta = TREND_SEASONAL_G @ theta
        expected.append(theta[0] + theta[2])
    assert_allclose(fc.points.values, expected, atol=1e-9)
    assert_allclose(fc.upper.values - fc.lower.values, 0.0, atol=1e-6)


def test_dlm_forecast_single_draw_matches_gaussian_quantiles():
    from scipy import stats

    y = simulate_trend_seasonal(30, (1.0, 0.1, 0.01, 0.05), seed=1)
    m0, C0 = default_initial(y)
    template = build_trend_seasonal(m0, C0, 1.0, np.zeros(5))
    chain = GibbsChain(np.array([[1.0, 0.1, 0.01, 0.05]]), 1, 0, 5)
    fc = dlm_forecast(template, chain, TimeSeries(y), 4, samples_per_draw=200_000)
    spec = template.with_variances(1.0, [0.1, 0.01, 0.05, 0, 0])
    from gdpcast.dlm import predictive_moments
    f, Q = predictive_moments(spec, kalman_filter(spec, y), 4)
    assert_allclose(fc.points.values, f, rtol=1e-12)
    z = stats.norm.ppf(0.975)
    # quantile standard error of a normal at 2.5%: sqrt(p(1-p)/N)/phi(z) * sd
    se = np.sqrt(0.025 * 0.975 / 200_000) / stats.norm.pdf(z) * np.sqrt(Q)
    assert np.all(np.abs(fc.upper.values - (f + z * np.sqrt(Q))) < 4 * se)
    assert np.all(np.abs(fc.lower.values - (f - z * np.sqrt(Q))) < 4 * se)


def test_dlm_forecast_interval_widens_and_errors():
    y = simulate_trend_seasonal(40, (1.0, 0.1, 0.01, 0.05), seed=2)
    chain = gibbs(y, n_iter=120, burn_in=20, seed=2)
    m0, C0 = default_initial(y)
    template = build_trend_seasonal(m0, C0, 1.0, np.zeros(5))
    fc = dlm_forecast(template, chain, TimeSeries(y, (2000, 1)), 12)
    width = fc.upper.values - fc.lower.values
    assert np.all(np.diff(width) >= -1e-9 * width[:-1])
    assert fc.points.origin == (2010, 1)
    with pytest.raises(InputError):
        dlm_forecast(template, GibbsChain(np.ones((3, 4)), 3, 3, 0), y, 2)
    with pytest.raises(InputError):
        dlm_forecast(template, chain, y, 0)


def test_default_priors_scale():
    y = np.cumsum(np.random.default_rng(0).normal(size=50))
    pri = default_priors(y)
    v = np.var(np.diff(y), ddof=1)
    assert pri.a[0] == pytest.approx(1 / v)
    assert pri.shape(0)[0] == pytest.approx(1e-3)
    assert pri.rate(np.zeros(4))[0] == pytest.approx(1e-3 * v)
