import math

import numpy as np
import pytest
from scipy import signal as sps

from drivedesign.wiener import (
    WienerModel,
    condensed_negloglik,
    filtfilt_zero_phase,
    fit_empirical_bayes,
    realized_gain_squared,
    smoother_gain_target,
    wiener_coefficients,
)


def negloglik_reference(a, xi, gamma):
    """Straight dense evaluation from the explicit Toeplitz factor."""
    n = len(a)
    T = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            T[i, j] = xi ** (i - j)
    B = gamma * (T @ T.T) + np.eye(n)
    quad = float(a @ np.linalg.solve(B, a))
    _, logdet = np.linalg.slogdet(B)
    return n - n * math.log(n) + n * math.log(quad) + logdet


def ar1_plus_noise(xi, sigma_v, sigma_a, n, seed):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    prev = 0.0
    for k, v in enumerate(rng.normal(0.0, sigma_v, size=n)):
        prev = xi * prev + v
        x[k] = prev
    return x + rng.normal(0.0, sigma_a, size=n)


class TestCondensedNegloglik:
    def test_two_sample_hand_oracle(self):
        a = np.array([1.0, 0.0])
        # T = [[1, 0], [0.5, 1]] for xi = 0.5; everything else is 2x2 algebra.
        expected = negloglik_reference(a, 0.5, 1.0)
        assert condensed_negloglik(a, 0.5, 1.0) == pytest.approx(expected, abs=1e-6)

    def test_vanishing_prior_limit(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=50)
        limit = 50 - 50 * math.log(50) + 50 * math.log(float(a @ a))
        assert condensed_negloglik(a, 0.5, 1e-9) == pytest.approx(limit, abs=1e-5)

    def test_dense_matches_reference(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=40)
        for xi in (0.2, 0.9):
            for gamma in (0.05, 3.0):
                val = condensed_negloglik(a, xi, gamma, method="dense")
                assert val == pytest.approx(negloglik_reference(a, xi, gamma), abs=1e-6)

    def test_recursive_matches_dense(self):
        rng = np.random.default_rng(2)
        for n in (3, 50, 200):
            a = rng.normal(size=n)
            for xi in (0.1, 0.5, 0.95):
                for gamma in (1e-3, 1.0, 1e3):
                    d = condensed_negloglik(a, xi, gamma, method="dense")
                    r = condensed_negloglik(a, xi, gamma, method="recursive")
                    assert r == pytest.approx(d, abs=1e-8)

    def test_recursive_matches_dense_extreme_ratio(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=120)
        d = condensed_negloglik(a, 0.9, 1e5, method="dense")
        r = condensed_negloglik(a, 0.9, 1e5, method="recursive")
        assert r == pytest.approx(d, rel=1e-6)

    def test_minimizer_concentrates_near_true_pole(self):
        # Signals generated with xi = 0.9, gamma = 50 put the profile
        # minimum over xi (at the true ratio) within 0.05 of 0.9.
        xi_scan = np.arange(0.80, 0.976, 0.005)
        for seed in range(3):
            a = ar1_plus_noise(0.9, math.sqrt(50.0), 1.0, 2000, seed)
            vals = [condensed_negloglik(a, x, 50.0, method="recursive") for x in xi_scan]
            xi_best = xi_scan[int(np.argmin(vals))]
            assert abs(xi_best - 0.9) <= 0.05

    def test_input_validation(self):
        a = np.ones(5)
        with pytest.raises(ValueError):
            condensed_negloglik(a, 1.0, 1.0)
        with pytest.raises(ValueError):
            condensed_negloglik(a, 0.5, 0.0)
        with pytest.raises(ValueError):
            condensed_negloglik(np.ones(1), 0.5, 1.0)
        with pytest.raises(ValueError):
            condensed_negloglik(a, 0.5, 1.0, method="magic")


class TestWienerCoefficients:
    def test_hand_values(self):
        beta, c = wiener_coefficients(0.5, 1.0, 1.0)
        S = 2.25
        assert beta == pytest.approx(S - math.sqrt(S**2 - 1.0), abs=1e-12)
        assert beta == pytest.approx(0.234436, abs=1e-6)
        assert c == pytest.approx(0.684739, abs=1e-5)

    def test_root_pair_product_is_one(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            xi = float(rng.uniform(0.05, 0.95))
            sv2 = float(rng.uniform(0.01, 10.0))
            sa2 = float(rng.uniform(0.01, 10.0))
            beta, _ = wiener_coefficients(xi, sv2, sa2)
            S = (sv2 + sa2 * (1 + xi**2)) / (2 * xi * sa2)
            other = S + math.sqrt(S**2 - 1.0)
            assert 0.0 < beta < 1.0
            assert beta * other == pytest.approx(1.0, rel=1e-12)

    def test_noiseless_limit_is_identity_filter(self):
        beta, c = wiener_coefficients(0.7, 1.0, 1e-12)
        assert beta == pytest.approx(0.0, abs=1e-10)
        assert c == pytest.approx(1.0, abs=1e-10)

    def test_more_noise_means_heavier_smoothing(self):
        betas = [
            wiener_coefficients(0.8, 1.0, float(s))[0] for s in np.logspace(-3, 3, 25)
        ]
        assert np.all(np.diff(betas) > 0)

    def test_two_pass_gain_matches_target_smoother(self):
        omega = np.linspace(0.0, math.pi, 512)
        for xi, sv2, sa2 in [(0.5, 1.0, 1.0), (0.9, 0.0025, 0.04), (0.2, 10.0, 0.5)]:
            beta, c = wiener_coefficients(xi, sv2, sa2)
            target = smoother_gain_target(xi, sv2, sa2, omega)
            realized = realized_gain_squared(beta, c, omega)
            np.testing.assert_allclose(realized, target, atol=1e-10)


class TestFiltFilt:
    def test_identity_filter(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=64)
        np.testing.assert_allclose(filtfilt_zero_phase(x, 0.0, 1.0), x, atol=1e-15)

    def test_constant_signal_two_pass_gain(self):
        x = np.full(100, 3.7)
        y = filtfilt_zero_phase(x, 0.6, 0.8)
        np.testing.assert_allclose(y, (0.8 / 0.4) ** 2 * 3.7, rtol=1e-12)

    def test_wiener_gain_approaches_one_without_noise(self):
        beta, c = wiener_coefficients(0.7, 1.0, 1e-10)
        y = filtfilt_zero_phase(np.full(50, 2.0), beta, c)
        np.testing.assert_allclose(y, 2.0, rtol=1e-8)

    def test_sinusoid_correlation_peaks_at_zero_lag(self):
        k = np.arange(1000)
        x = np.sin(0.2 * k)
        y = filtfilt_zero_phase(x, 0.5, 0.7)
        w = slice(100, 900)
        lags = range(-8, 9)
        corr = [float(np.dot(y[w], np.roll(x, lag)[w])) for lag in lags]
        assert list(lags)[int(np.argmax(corr))] == 0

    def test_impulse_response_has_zero_phase(self):
        L = 4096
        x = np.zeros(L)
        x[L // 2] = 1.0
        y = filtfilt_zero_phase(x, 0.85, 1.0)
        H = np.fft.rfft(np.roll(y, -L // 2))
        mask = np.abs(H) > 1e-12 * np.abs(H).max()
        assert np.max(np.abs(np.angle(H[mask]))) < 1e-6

    def test_causal_baseline_lags_while_two_pass_does_not(self):
        # A causal unity-gain low-pass (pole 0.96) delays a slow sinusoid;
        # the forward-backward sweep does not.
        k = np.arange(4000)
        x = np.sin(0.02 * k)
        causal = sps.lfilter([0.04], [1.0, -0.96], x)
        two_pass = filtfilt_zero_phase(x, 0.96, 0.04)
        w = slice(500, 3500)
        lags = range(0, 80)
        corr_causal = [float(np.dot(causal[w], np.roll(x, lag)[w])) for lag in lags]
        corr_two_pass = [float(np.dot(two_pass[w], np.roll(x, lag)[w])) for lag in lags]
        assert int(np.argmax(corr_causal)) > 5
        assert int(np.argmax(corr_two_pass)) == 0

    def test_single_sample(self):
        y = filtfilt_zero_phase(np.array([2.0]), 0.5, 0.5)
        assert y.shape == (1,)
        np.testing.assert_allclose(y, (0.5 / 0.5) ** 2 * 2.0, rtol=1e-12)

    def test_rejects_unstable_pole(self):
        with pytest.raises(ValueError):
            filtfilt_zero_phase(np.ones(10), 1.0, 0.5)


class TestEmpiricalBayes:
    def test_white_noise_pins_ratio_at_lower_bound(self):
        rng = np.random.default_rng(6)
        a = rng.normal(0.0, 0.3, size=5000)
        model = fit_empirical_bayes(a)
        assert model.fit_status == "gamma_at_lower_bound"
        assert model.sigma_a2 == pytest.approx(float(np.var(a)), rel=0.10)

    def test_noiseless_ar1_pins_ratio_at_upper_bound(self):
        rng = np.random.default_rng(7)
        x = np.empty(2000)
        prev = 0.0
        for k, v in enumerate(rng.normal(0.0, 0.1, size=2000)):
            prev = 0.95 * prev + v
            x[k] = prev
        model = fit_empirical_bayes(x)
        assert model.fit_status == "gamma_at_upper_bound"
        assert model.sigma_a2 < 1e-4

    def test_synthetic_recovery(self):
        fits = [
            fit_empirical_bayes(ar1_plus_noise(0.9, 0.05, 0.2, 2000, seed))
            for seed in range(3)
        ]
        xi_med = float(np.median([m.xi for m in fits]))
        sa2_med = float(np.median([m.sigma_a2 for m in fits]))
        assert abs(xi_med - 0.9) <= 0.07
        assert abs(sa2_med - 0.04) <= 0.3 * 0.04

    def test_model_fields_are_consistent(self):
        model = fit_empirical_bayes(ar1_plus_noise(0.8, 0.1, 0.1, 600, 0))
        assert model.sigma_v2 == pytest.approx(model.gamma_ratio * model.sigma_a2)
        beta, c = wiener_coefficients(model.xi, model.sigma_v2, model.sigma_a2)
        assert model.beta == pytest.approx(beta)
        assert model.c == pytest.approx(c)

    def test_grid_overrides(self):
        a = ar1_plus_noise(0.8, 0.1, 0.1, 200, 1)
        model = fit_empirical_bayes(
            a, xi_grid=np.array([0.5, 0.8]), gamma_grid=np.array([0.5, 1.0, 2.0]),
            refine=False,
        )
        assert model.xi in (0.5, 0.8)
        assert model.gamma_ratio in (0.5, 1.0, 2.0)

    def test_rejects_short_signal(self):
        with pytest.raises(ValueError):
            fit_empirical_bayes(np.ones(9))


class TestWienerModel:
    def test_inconsistent_variances_rejected(self):
        with pytest.raises(ValueError):
            WienerModel(
                xi=0.5, gamma_ratio=2.0, sigma_a2=1.0, sigma_v2=1.0, beta=0.3, c=0.5
            )

    def test_valid_model_passes(self):
        m = WienerModel(
            xi=0.5, gamma_ratio=2.0, sigma_a2=1.0, sigma_v2=2.0, beta=0.3, c=0.5
        )
        assert m.fit_status == "ok"
