import math

import numpy as np
import pytest
from scipy import integrate, special

from drivedesign.estimator import (
    DriveLog,
    MassEstimate,
    QualityTarget,
    chi2_percentile,
    designed_relative_error,
    estimate_mass,
    estimate_with_nuisance,
    excitation_energy,
    r_designed_from_accuracy,
)


def chi2_quantile_by_integration(alpha, dof):
    """Invert the chi-square CDF by quadrature plus bisection."""

    def pdf(x):
        return x ** (dof / 2.0 - 1.0) * math.exp(-x / 2.0) / (
            2.0 ** (dof / 2.0) * special.gamma(dof / 2.0)
        )

    def cdf(x):
        val, _ = integrate.quad(pdf, 0.0, x, limit=200)
        return val

    lo, hi = 0.0, 1.0
    while cdf(hi) < alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestChi2Percentile:
    def test_against_integration_oracle(self):
        for alpha, dof in [(0.99, 2), (0.95, 1), (0.9, 3), (0.5, 4), (0.99, 1)]:
            ref = chi2_quantile_by_integration(alpha, dof)
            assert chi2_percentile(alpha, dof) == pytest.approx(ref, abs=1e-8)

    def test_frozen_values(self):
        assert chi2_percentile(0.99, 2) == pytest.approx(9.21034, abs=1e-4)
        assert chi2_percentile(0.5, 2) == pytest.approx(2.0 * math.log(2.0), rel=1e-10)
        assert chi2_percentile(0.95, 1) == pytest.approx(3.8415, abs=1e-4)

    def test_dof_two_closed_form(self):
        for alpha in (0.1, 0.5, 0.9, 0.99, 0.999):
            assert chi2_percentile(alpha, 2) == pytest.approx(
                -2.0 * math.log(1.0 - alpha), rel=1e-10
            )

    def test_validation(self):
        with pytest.raises(ValueError):
            chi2_percentile(0.0, 2)
        with pytest.raises(ValueError):
            chi2_percentile(0.5, 0)


class TestEstimateMass:
    def test_exact_linear_data(self):
        est = estimate_mass([1.0, 2.0], [2.0, 4.0])
        assert est.m_hat == pytest.approx(2.0)
        assert est.sigma_e2_hat == pytest.approx(0.0, abs=1e-24)
        assert est.delta_hat is None

    def test_orthogonal_data(self):
        est = estimate_mass([1.0, -1.0], [1.0, 1.0])
        assert est.m_hat == pytest.approx(0.0)

    def test_zero_acceleration_unidentifiable(self):
        with pytest.raises(ValueError, match="unidentifiable"):
            estimate_mass([0.0, 0.0], [1.0, 2.0])

    def test_r_trace_is_running_energy(self):
        est = estimate_mass([3.0, 4.0, 0.0], [3.0, 4.0, 0.5])
        np.testing.assert_allclose(est.r_trace, [9.0, 25.0, 25.0])

    def test_covariance_is_sigma_over_energy(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.2, 1.0, size=100)
        f = 3.0 * a + rng.normal(0.0, 0.1, size=100)
        est = estimate_mass(a, f)
        R = float(a @ a)
        assert est.m_variance == pytest.approx(est.sigma_e2_hat / R, rel=1e-12)

    def test_gaussian_sampling_law(self):
        # Empirical spread over 2000 seeds against sqrt(sigma_e^2 / R(N)).
        m_true, sigma_e, N = 15500.0, 100.0, 500
        a = 0.9 * np.tile([1.0, 1.0, -1.0, -1.0], N // 4 + 1)[:N]
        R = float(a @ a)
        rng = np.random.default_rng(42)
        noise = rng.normal(0.0, sigma_e, size=(2000, N))
        m_hats = (noise + m_true * a) @ a / R
        assert np.std(m_hats) == pytest.approx(math.sqrt(sigma_e**2 / R), rel=0.10)
        est = estimate_mass(a, m_true * a + noise[0])
        assert est.m_hat == pytest.approx(m_hats[0], rel=1e-12)


class TestEstimateWithNuisance:
    def test_exact_affine_data(self):
        a = np.array([1.0, 2.0, 3.0])
        Phi = np.column_stack([a, np.ones(3)])
        est = estimate_with_nuisance(Phi, 2.0 * a + 3.0)
        assert est.m_hat == pytest.approx(2.0, rel=1e-9)
        assert est.delta_hat == pytest.approx(3.0, rel=1e-9)

    def test_collinear_offset_rejected(self):
        Phi = np.column_stack([np.ones(5), np.ones(5)])
        with pytest.raises(ValueError, match="column 1"):
            estimate_with_nuisance(Phi, np.ones(5))

    def test_single_column_matches_plain_estimator(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(-1.0, 1.0, size=60)
        f = 7.5 * a + rng.normal(0.0, 0.3, size=60)
        plain = estimate_mass(a, f)
        viaols = estimate_with_nuisance(a, f)
        assert viaols.m_hat == pytest.approx(plain.m_hat, rel=1e-12)
        assert viaols.sigma_e2_hat == pytest.approx(plain.sigma_e2_hat, rel=1e-12)
        assert viaols.m_variance == pytest.approx(plain.m_variance, rel=1e-12)
        assert viaols.delta_hat is None

    def test_noise_free_exactness(self):
        rng = np.random.default_rng(2)
        Phi = rng.normal(size=(50, 3))
        theta = np.array([4.0, -2.0, 0.5])
        est = estimate_with_nuisance(Phi, Phi @ theta)
        assert est.m_hat == pytest.approx(4.0, rel=1e-9)

    def test_offset_model_bias_small(self):
        # Offset-augmented fit recovers the mass without systematic error.
        m_true, delta_true, sigma_e, N = 15500.0, 200.0, 100.0, 400
        a = 0.9 * np.tile([1.0, -1.0], N // 2)[:N]
        Phi = np.column_stack([a, np.ones(N)])
        rng = np.random.default_rng(3)
        y = m_true * a + delta_true + rng.normal(0.0, sigma_e, size=(1000, N))
        theta, *_ = np.linalg.lstsq(Phi, y.T, rcond=None)
        assert abs(np.mean(theta[0]) - m_true) < 0.01 * m_true
        est = estimate_with_nuisance(Phi, y[0])
        assert est.m_hat == pytest.approx(theta[0, 0], rel=1e-10)
        assert est.delta_hat == pytest.approx(theta[1, 0], rel=1e-8)

    def test_covariance_scales_inversely_with_energy(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(0.1, 1.0, size=80)
        f = 2.0 * a + rng.normal(0.0, 0.2, size=80)
        est1 = estimate_mass(a, f)
        est2 = estimate_mass(3.0 * a, f)
        R1 = est1.r_trace[-1]
        R2 = est2.r_trace[-1]
        assert R2 == pytest.approx(9.0 * R1, rel=1e-12)
        assert est2.m_variance * R2 == pytest.approx(est1.m_variance * R1, rel=1e-9)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            estimate_with_nuisance(np.ones((2, 2)), np.ones(2))


class TestExcitationEnergy:
    def test_arithmetic(self):
        assert excitation_energy([3.0, 4.0], 2) == pytest.approx(25.0)
        assert excitation_energy([3.0, 4.0], 1) == pytest.approx(9.0)

    def test_alternating_reaches_upper_bound(self):
        N, a_max = 120, 0.9
        a = a_max * (-1.0) ** np.arange(N)
        assert excitation_energy(a, N) == pytest.approx(N * a_max**2, rel=1e-12)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            excitation_energy([1.0, 2.0], 0)
        with pytest.raises(IndexError):
            excitation_energy([1.0, 2.0], 3)


class TestQualityTarget:
    def test_unit_algebra(self):
        t = QualityTarget(m_nominal=2.0, sigma_e2=1.0, chi2=2.0, gamma_acc=1.0)
        assert r_designed_from_accuracy(t) == pytest.approx(1.0)

    def test_doubling_nominal_mass_quarters_requirement(self):
        t1 = QualityTarget(m_nominal=10.0, sigma_e2=5.0, chi2=9.21, gamma_acc=2.0)
        t2 = QualityTarget(m_nominal=20.0, sigma_e2=5.0, chi2=9.21, gamma_acc=2.0)
        assert r_designed_from_accuracy(t2) == pytest.approx(
            r_designed_from_accuracy(t1) / 4.0
        )

    def test_accuracy_roundtrip_at_design_point(self):
        # gamma backed out of R = 600 regenerates R through the identity.
        m0, sigma_e2, chi2 = 15500.0, 600.0, chi2_percentile(0.99, 2)
        gamma = 600.0 * m0**2 / (2.0 * sigma_e2 * chi2)
        t = QualityTarget(
            m_nominal=m0, sigma_e2=sigma_e2, n_params=2, gamma_acc=gamma,
            r_designed=600.0,
        )
        assert r_designed_from_accuracy(t) == pytest.approx(600.0, rel=1e-9)

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            QualityTarget(
                m_nominal=2.0, sigma_e2=1.0, chi2=2.0, gamma_acc=1.0, r_designed=5.0
            )

    def test_chi2_autofilled_from_alpha(self):
        t = QualityTarget(m_nominal=1.0, sigma_e2=1.0, alpha=0.99, n_params=2)
        assert t.chi2 == pytest.approx(9.21034, abs=1e-4)

    def test_designed_relative_error_hand_value(self):
        t = QualityTarget(
            m_nominal=15500.0, sigma_e2=600.0, chi2=9.2, r_designed=600.0
        )
        assert designed_relative_error(t) == pytest.approx(
            math.sqrt(9.2) / 15500.0, rel=1e-12
        )
        assert designed_relative_error(t) == pytest.approx(1.957e-4, rel=1e-3)

    def test_relative_error_scaling(self):
        base = QualityTarget(m_nominal=100.0, sigma_e2=4.0, chi2=9.2, r_designed=50.0)
        quad = QualityTarget(m_nominal=100.0, sigma_e2=4.0, chi2=9.2, r_designed=200.0)
        big = QualityTarget(m_nominal=100.0, sigma_e2=4.0, chi2=9.2, r_designed=1e12)
        assert designed_relative_error(quad) == pytest.approx(
            designed_relative_error(base) / 2.0, rel=1e-12
        )
        assert designed_relative_error(big) < 1e-6

    def test_validation(self):
        with pytest.raises(ValueError):
            QualityTarget(m_nominal=-1.0, sigma_e2=1.0)
        with pytest.raises(ValueError):
            QualityTarget(m_nominal=1.0, sigma_e2=1.0, alpha=1.5)


class TestDriveLog:
    def test_accepts_uniform_grid(self):
        log = DriveLog(t=[0.5, 1.0, 1.5], a_meas=[0.1, 0.2, 0.3], f_res=[1.0, 2.0, 3.0])
        assert log.ts == pytest.approx(0.5)

    def test_rejects_non_uniform(self):
        with pytest.raises(ValueError, match="uniform"):
            DriveLog(t=[0.0, 1.0, 2.5], a_meas=[0.0] * 3, f_res=[0.0] * 3)

    def test_rejects_decreasing(self):
        with pytest.raises(ValueError, match="increasing"):
            DriveLog(t=[0.0, 1.0, 0.5], a_meas=[0.0] * 3, f_res=[0.0] * 3)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            DriveLog(t=[0.0, 1.0], a_meas=[0.0], f_res=[0.0, 0.0])


class TestMassEstimate:
    def test_rejects_decreasing_trace(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            MassEstimate(
                m_hat=1.0, delta_hat=None, theta_cov=[[1.0]],
                r_trace=[2.0, 1.0], sigma_e2_hat=1.0,
            )

    def test_rejects_asymmetric_covariance(self):
        with pytest.raises(ValueError, match="symmetric"):
            MassEstimate(
                m_hat=1.0, delta_hat=0.0, theta_cov=[[1.0, 0.5], [0.1, 1.0]],
                r_trace=[1.0], sigma_e2_hat=1.0,
            )

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ValueError, match="semi-definite"):
            MassEstimate(
                m_hat=1.0, delta_hat=0.0, theta_cov=[[1.0, 2.0], [2.0, 1.0]],
                r_trace=[1.0], sigma_e2_hat=1.0,
            )
