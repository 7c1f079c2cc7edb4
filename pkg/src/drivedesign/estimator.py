"""Least-squares mass estimation and excitation-energy accounting.

The resultant force balances mass times acceleration, so a logged drive
yields the regression f_res(k) = m a(k) + e(k) and, with slowly varying
disturbances, the offset-augmented form f_res(k) = m a(k) + delta + e(k).
Estimation quality is governed entirely by the excitation energy
R(t) = sum a(k)^2: the mass estimate is Gaussian with variance
sigma_e^2 / R(N), which the design-side helpers turn into excitation
requirements and accuracy bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DriveLog",
    "MassEstimate",
    "QualityTarget",
    "estimate_mass",
    "estimate_with_nuisance",
    "excitation_energy",
    "r_designed_from_accuracy",
    "designed_relative_error",
    "chi2_percentile",
]


@dataclass(frozen=True)
class DriveLog:
    """A logged drive: timestamps, measured acceleration, resultant force.

    Timestamps must be strictly increasing with a constant step; the three
    arrays must have equal length.
    """

    t: np.ndarray
    a_meas: np.ndarray
    f_res: np.ndarray

    def __post_init__(self):
        for name in ("t", "a_meas", "f_res"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.t.shape == self.a_meas.shape == self.f_res.shape) or self.t.ndim != 1:
            raise ValueError("t, a_meas, f_res must be 1-D arrays of equal length")
        if self.t.size == 0:
            raise ValueError("drive log must contain at least one sample")
        if self.t.size > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("timestamps must be uniformly spaced")

    @property
    def ts(self) -> float:
        """Sampling interval; requires at least two samples."""
        if self.t.size < 2:
            raise ValueError("sampling interval undefined for a single sample")
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True)
class MassEstimate:
    """Least-squares estimate with its accuracy bookkeeping.

    ``theta_cov`` is the covariance of all estimated parameters; for the
    plain estimator it is 1x1 and equals sigma_e2_hat / R(N).  ``r_trace``
    holds the running excitation energy R(t) for t = 1..N.
    """

    m_hat: float
    delta_hat: float | None
    theta_cov: np.ndarray
    r_trace: np.ndarray
    sigma_e2_hat: float

    def __post_init__(self):
        object.__setattr__(self, "theta_cov", np.atleast_2d(np.asarray(self.theta_cov, float)))
        object.__setattr__(self, "r_trace", np.asarray(self.r_trace, dtype=float))
        if np.any(np.diff(self.r_trace) < -1e-12):
            raise ValueError("excitation trace must be non-decreasing")
        C = self.theta_cov
        if C.shape[0] != C.shape[1]:
            raise ValueError("covariance must be square")
        if np.all(np.isfinite(C)):
            if not np.allclose(C, C.T, rtol=1e-9, atol=1e-12):
                raise ValueError("covariance must be symmetric")
            w = np.linalg.eigvalsh(C)
            if w.min() < -1e-10 * max(1.0, w.max()):
                raise ValueError("covariance must be positive semi-definite")

    @property
    def m_variance(self) -> float:
        """Variance of the mass estimate (first diagonal entry)."""
        return float(self.theta_cov[0, 0])


@dataclass(frozen=True)
class QualityTarget:
    """Designed-accuracy specification tying excitation to estimation error.

    The defining identity is

        r_designed = 2 sigma_e2 gamma_acc chi2 / m_nominal^2,

    with chi2 the alpha-percentile of chi-square with ``n_params`` degrees
    of freedom.  ``chi2`` is filled in from (alpha, n_params) when not given
    explicitly; if both ``r_designed`` and ``gamma_acc`` are populated they
    must satisfy the identity.
    """

    m_nominal: float
    sigma_e2: float
    alpha: float = 0.99
    n_params: int = 1
    chi2: float | None = None
    gamma_acc: float | None = None
    r_designed: float | None = None

    def __post_init__(self):
        if self.m_nominal <= 0 or self.sigma_e2 <= 0:
            raise ValueError("m_nominal and sigma_e2 must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_params < 1:
            raise ValueError("n_params must be at least 1")
        if self.chi2 is None:
            object.__setattr__(self, "chi2", chi2_percentile(self.alpha, self.n_params))
        if self.chi2 <= 0:
            raise ValueError("chi2 must be positive")
        if self.gamma_acc is not None and self.gamma_acc <= 0:
            raise ValueError("gamma_acc must be positive when given")
        # r_designed = 0 is allowed as the degenerate "no excitation required"
        # target; negative energy is meaningless.
        if self.r_designed is not None and self.r_designed < 0:
            raise ValueError("r_designed must be nonnegative when given")
        if self.r_designed is not None and self.gamma_acc is not None:
            implied = 2.0 * self.sigma_e2 * self.gamma_acc * self.chi2 / self.m_nominal**2
            if not math.isclose(self.r_designed, implied, rel_tol=1e-9):
                raise ValueError(
                    f"r_designed = {self.r_designed} is inconsistent with the accuracy "
                    f"parameters (implied {implied})"
                )


def excitation_energy(a: np.ndarray, t: int) -> float:
    """Excitation energy R(t) = sum of a(k)^2 for k = 1..t (1-based t)."""
    a = np.asarray(a, dtype=float)
    if not (1 <= t <= a.size):
        raise IndexError(f"t must lie in [1, {a.size}], got {t}")
    return float(np.dot(a[:t], a[:t]))


def estimate_mass(a: np.ndarray, f_res: np.ndarray) -> MassEstimate:
    """Single-parameter least squares: f_res(k) = m a(k) + e(k).

    Parameters
    ----------
    a : acceleration regressor (m/s^2)
    f_res : resultant-force response (N)

    Returns
    -------
    MassEstimate with m_hat = sum(f a)/R(N), the running excitation trace,
    sigma_e2_hat = RSS/(N-1), and scalar covariance sigma_e2_hat/R(N).

    Raises
    ------
    ValueError if the acceleration is identically zero (mass unidentifiable)
    or the lengths differ.
    """
    a = np.asarray(a, dtype=float)
    f = np.asarray(f_res, dtype=float)
    if a.shape != f.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("a and f_res must be 1-D arrays of equal nonzero length")
    r_trace = np.cumsum(a * a)
    R = float(r_trace[-1])
    if R == 0.0:
        raise ValueError("acceleration is identically zero: mass is unidentifiable")
    m_hat = float(np.dot(f, a)) / R
    resid = f - m_hat * a
    n = a.size
    sigma_e2_hat = float(np.dot(resid, resid)) / (n - 1) if n > 1 else math.nan
    P = sigma_e2_hat / R
    return MassEstimate(
        m_hat=m_hat,
        delta_hat=None,
        theta_cov=np.array([[P]]),
        r_trace=r_trace,
        sigma_e2_hat=sigma_e2_hat,
    )


def estimate_with_nuisance(regressors: np.ndarray, y: np.ndarray) -> MassEstimate:
    """Ordinary least squares with nuisance columns alongside acceleration.

    The first regressor column must be the acceleration; a second column
    (typically all ones) models a slowly varying force offset and is
    reported as ``delta_hat``.

    Parameters
    ----------
    regressors : N x n matrix, full column rank, N > n
    y : response vector of length N

    Raises
    ------
    ValueError on rank deficiency, naming the first column that is linearly
    dependent on its predecessors.
    """
    Phi = np.asarray(regressors, dtype=float)
    if Phi.ndim == 1:
        Phi = Phi[:, None]
    if Phi.ndim != 2:
        raise ValueError("regressors must be an N x n matrix")
    y = np.asarray(y, dtype=float)
    N, n = Phi.shape
    if y.shape != (N,):
        raise ValueError(f"y must have length {N}, got {y.shape}")
    if N <= n:
        raise ValueError(f"need more samples ({N}) than parameters ({n})")
    rank = 0
    for j in range(n):
        new_rank = np.linalg.matrix_rank(Phi[:, : j + 1])
        if new_rank == rank:
            raise ValueError(
                f"regressor column {j} is linearly dependent on the preceding "
                "columns: parameters are unidentifiable"
            )
        rank = new_rank
    gram = Phi.T @ Phi
    theta = np.linalg.solve(gram, Phi.T @ y)
    resid = y - Phi @ theta
    sigma_e2_hat = float(np.dot(resid, resid)) / (N - n)
    theta_cov = sigma_e2_hat * np.linalg.inv(gram)
    a = Phi[:, 0]
    return MassEstimate(
        m_hat=float(theta[0]),
        delta_hat=float(theta[1]) if n >= 2 else None,
        theta_cov=theta_cov,
        r_trace=np.cumsum(a * a),
        sigma_e2_hat=sigma_e2_hat,
    )


def chi2_percentile(alpha: float, dof: int) -> float:
    """Inverse CDF of the chi-square distribution.

    Evaluated through the regularized incomplete-gamma inversion,
    chi2 = 2 * P^-1(dof/2, alpha).
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if dof < 1:
        raise ValueError(f"dof must be at least 1, got {dof}")
    return float(2.0 * special.gammaincinv(dof / 2.0, alpha))


def r_designed_from_accuracy(target: QualityTarget) -> float:
    """Excitation energy required for the designed accuracy.

    R_designed = 2 sigma_e2 gamma_acc chi2 / m_nominal^2.
    """
    if target.gamma_acc is None:
        raise ValueError("target must populate gamma_acc")
    return 2.0 * target.sigma_e2 * target.gamma_acc * target.chi2 / target.m_nominal**2


def designed_relative_error(target: QualityTarget) -> float:
    """Designed maximum relative mass error at the target excitation.

    sqrt(sigma_e2 chi2 / (m_nominal^2 r_designed)); the alpha-confidence
    band on |m_hat - m| / m once R(N) reaches r_designed.
    """
    if target.r_designed is None:
        raise ValueError("target must populate r_designed")
    return math.sqrt(
        target.sigma_e2 * target.chi2 / (target.m_nominal**2 * target.r_designed)
    )
