"""Discrete longitudinal vehicle dynamics.

The vehicle is driven through a first-order actuator: a commanded input
u(k) produces realized acceleration

    a(k) = p * a(k-1) + (1 - p) * u(k),    a(0) = 0,

with pole p in (0, 1) and unity static gain.  Velocity and distance follow
by exact integration of zero-order-hold acceleration over the sampling
interval.  Arrays use 0-based storage for samples k = 1..n, so ``a[0]`` is
the response at the first sample instant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

__all__ = [
    "SamplingGrid",
    "ActuatorModel",
    "Profile",
    "build_actuator_toeplitz",
    "simulate_response",
    "build_kinematic_matrices",
    "integrate_kinematics",
    "make_profile",
    "profile_from_acceleration",
]


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling grid: interval ``ts`` seconds, horizon ``n`` samples."""

    ts: float
    n: int

    def __post_init__(self):
        if not (self.ts > 0.0 and np.isfinite(self.ts)):
            raise ValueError(f"sampling interval must be positive, got {self.ts}")
        if self.n < 1:
            raise ValueError(f"horizon must be at least 1 sample, got {self.n}")

    @property
    def times(self) -> np.ndarray:
        """Sample instants t(k) = k*ts for k = 1..n."""
        return self.ts * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class ActuatorModel:
    """First-order actuator with pole ``p`` in (0, 1) and unity static gain."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"actuator pole must lie in (0, 1), got {self.p}")


@dataclass(frozen=True)
class Profile:
    """A designed drive profile: input, realized acceleration, velocity, distance.

    All four arrays share the grid length.  ``a`` is the actuator response to
    ``u``; ``v`` and ``d`` are the exact discrete integrals of ``a`` starting
    from velocity ``v0`` and zero distance.  Construct through
    :func:`make_profile` or :func:`profile_from_acceleration` so these
    relations hold by construction.
    """

    grid: SamplingGrid
    v0: float
    u: np.ndarray
    a: np.ndarray
    v: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        for name in ("u", "a", "v", "d"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)

    @property
    def excitation(self) -> float:
        """Total excitation energy R(n) = sum of squared accelerations."""
        return float(np.dot(self.a, self.a))


def build_actuator_toeplitz(actuator: ActuatorModel, grid: SamplingGrid) -> np.ndarray:
    """Build the lower-triangular Toeplitz map F from input to acceleration.

    Row k of ``F @ u`` gives a(k) for the zero-initial-condition actuator
    recursion, so the first column is (1-p), (1-p)p, (1-p)p**2, ...

    Parameters
    ----------
    actuator : ActuatorModel
    grid : SamplingGrid

    Returns
    -------
    ndarray of shape (n, n)
    """
    p = actuator.p
    impulse = (1.0 - p) * p ** np.arange(grid.n)
    cols = np.arange(grid.n)
    lag = cols[:, None] - cols[None, :]
    F = np.where(lag >= 0, impulse[np.abs(lag)], 0.0)
    return F


def simulate_response(
    u: np.ndarray, actuator: ActuatorModel, grid: SamplingGrid
) -> np.ndarray:
    """Run the actuator recursion a(k) = p a(k-1) + (1-p) u(k) from rest."""
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n,):
        raise ValueError(f"input must have shape ({grid.n},), got {u.shape}")
    p = actuator.p
    # One-pole IIR filter; zero initial state matches starting from rest.
    return signal.lfilter([1.0 - p], [1.0, -p], u)


def build_kinematic_matrices(grid: SamplingGrid) -> tuple[np.ndarray, np.ndarray]:
    """Build the summation matrices G and H mapping acceleration to motion.

    With a the realized acceleration over the grid,

        v = v0 + ts * (G @ a)
        d = v0 * ts * k + ts**2 * (H @ a)

    where G is the lower-triangular all-ones matrix and H carries the
    zero-order-hold weights H[k, l] = (k - l) + 1/2 for l <= k (1-based
    sample indices).

    Returns
    -------
    (G, H) : pair of ndarray, each of shape (n, n)
    """
    n = grid.n
    G = np.tril(np.ones((n, n)))
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    H = np.where(diff >= 0, diff + 0.5, 0.0)
    return G, H


def integrate_kinematics(
    a: np.ndarray, grid: SamplingGrid, v0: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate an acceleration sequence into velocity and distance.

    Acceleration is held constant over each sampling interval, so the
    integrals are exact: velocity is a running sum and distance adds the
    trapezoid of each interval,

        v(k) = v0 + ts * sum_{l<=k} a(l)
        d(k) = d(k-1) + ts * v(k-1) + (ts**2 / 2) * a(k).

    Parameters
    ----------
    a : array of realized accelerations, one per sample
    grid : SamplingGrid matching ``a`` in length
    v0 : initial velocity at t = 0

    Returns
    -------
    (v, d) : velocity and cumulative distance at the sample instants
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (grid.n,):
        raise ValueError(f"acceleration must have shape ({grid.n},), got {a.shape}")
    ts = grid.ts
    v = v0 + ts * np.cumsum(a)
    # Each interval adds ts*v(k-1) + ts^2/2 * a(k), with v(0) = v0.
    v_prev = np.concatenate(([v0], v[:-1]))
    d = ts * np.cumsum(v_prev) + 0.5 * ts * ts * np.cumsum(a)
    return v, d


def make_profile(
    u: np.ndarray, actuator: ActuatorModel, grid: SamplingGrid, v0: float = 0.0
) -> Profile:
    """Simulate ``u`` through the actuator and package the full trajectory."""
    u = np.asarray(u, dtype=float)
    a = simulate_response(u, actuator, grid)
    v, d = integrate_kinematics(a, grid, v0)
    return Profile(grid=grid, v0=v0, u=u, a=a, v=v, d=d)


def profile_from_acceleration(a: np.ndarray, grid: SamplingGrid, v0: float = 0.0) -> Profile:
    """Package a directly specified acceleration sequence (identity actuator)."""
    a = np.asarray(a, dtype=float)
    if a.shape != (grid.n,):
        raise ValueError(f"acceleration must have shape ({grid.n},), got {a.shape}")
    v, d = integrate_kinematics(a, grid, v0)
    return Profile(grid=grid, v0=v0, u=a.copy(), a=a, v=v, d=d)
