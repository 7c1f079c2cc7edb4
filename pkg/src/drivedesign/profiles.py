"""Constructive excitation profiles and their closed-form distance laws.

Periodic bang-bang profiles that certify feasibility of a designed
excitation target, the critical velocity/acceleration ratio that minimizes
traveled distance, and the monotone growth of the distance gap between the
time-optimal and distance-optimal designs.  Everything here operates on
ideal acceleration (actuator lag neglected): emitted profiles store u = a
and are meant to be validated with a near-identity actuator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from drivedesign.dynamics import Profile, SamplingGrid, profile_from_acceleration
from drivedesign.problems import Bounds

__all__ = [
    "GapAnalysis",
    "GapReport",
    "PeriodicProfileSpec",
    "critical_vmax",
    "d_star",
    "d_time_formula",
    "distance_optimal_profile",
    "gap_analysis",
    "periodic_profile",
]

# Hard cap on constructed profile length; beyond this the requested geometry
# (tiny cycles, huge targets) is treated as infeasible rather than building
# an absurd array.
_MAX_SAMPLES = 5_000_000


@dataclass(frozen=True)
class PeriodicProfileSpec:
    """Shape of a periodic accelerate/decelerate excitation profile."""

    n_plus: int
    n_minus: int
    m_periods: int
    total_n: int

    def __post_init__(self):
        if self.n_plus < 1 or self.n_minus < 1:
            raise ValueError("phase sample counts must be at least 1")
        if self.m_periods < 1:
            raise ValueError("need at least one period")
        if self.total_n != self.m_periods * (self.n_plus + self.n_minus):
            raise ValueError("total_n must equal m_periods * (n_plus + n_minus)")


@dataclass(frozen=True)
class GapAnalysis:
    """Distance comparison of the two designs at one velocity range."""

    delta_v: float
    d_time: float
    d_distance: float
    delta_d: float

    def __post_init__(self):
        scale = max(1.0, abs(self.d_time), abs(self.d_distance))
        if abs(self.delta_d - (self.d_time - self.d_distance)) > 1e-9 * scale:
            raise ValueError("delta_d must equal d_time - d_distance")


@dataclass(frozen=True)
class GapReport:
    """Sequence of GapAnalysis entries plus the grid-level verdicts.

    Indexing and iteration go straight to the entries, so the report can be
    used wherever a plain sequence of GapAnalysis is expected.
    """

    entries: tuple[GapAnalysis, ...]
    delta_v_star: float
    strictly_increasing: bool = field(default=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        return self.entries[idx]

    def __iter__(self):
        return iter(self.entries)


def _phase_levels(delta_v: float, ts: float, rate: float) -> np.ndarray:
    """Constant-rate steps covering ``delta_v``, final step trimmed.

    ``rate`` is the signed acceleration; the count is the ceiling of the
    exact step count, and the last level is reduced so the phase ends
    exactly ``delta_v`` away (sign of ``rate``) with no overshoot.
    """
    exact = delta_v / (ts * abs(rate))
    count = max(1, math.ceil(exact - 1e-12))
    levels = np.full(count, rate)
    remainder = delta_v - (count - 1) * ts * abs(rate)
    levels[-1] = math.copysign(remainder / ts, rate)
    return levels


def periodic_profile(
    bounds: Bounds, grid_ts: float, r_designed: float
) -> tuple[PeriodicProfileSpec, Profile]:
    """Periodic max-accel / max-decel profile certifying the energy target.

    Each period climbs from v_min to v_max in n_plus samples at a_max and
    returns in n_minus samples at a_min, so velocity stays inside the band
    by construction.  Phase counts are integerized by rounding up and
    trimming the final step of each phase; the period count M is the
    smallest integer whose realized per-period energy covers r_designed
    (equal to ceil(R / (n+ a_max^2 + n- a_min^2)) whenever the band divides
    evenly, and never below that bound otherwise).
    """
    if grid_ts <= 0.0:
        raise ValueError("grid_ts must be positive")
    if r_designed < 0.0:
        raise ValueError("r_designed must be nonnegative")
    dv = bounds.v_max - bounds.v_min
    if grid_ts * bounds.a_max > dv:
        raise ValueError(
            f"one sample at a_max climbs {grid_ts * bounds.a_max:.6g} m/s, more than "
            f"the velocity range {dv:.6g}; no room for a single step"
        )
    up = _phase_levels(dv, grid_ts, bounds.a_max)
    down = _phase_levels(dv, grid_ts, bounds.a_min)
    period = np.concatenate([up, down])
    energy = float(period @ period)
    m = max(1, math.ceil(r_designed / energy - 1e-12))
    total = m * period.size
    if total > _MAX_SAMPLES:
        raise ValueError(f"profile would need {total} samples; target unreachable")
    spec = PeriodicProfileSpec(
        n_plus=up.size, n_minus=down.size, m_periods=m, total_n=total
    )
    a = np.tile(period, m)
    prof = profile_from_acceleration(
        a, SamplingGrid(ts=grid_ts, n=total), v0=bounds.v_min
    )
    return spec, prof


def critical_vmax(a_max: float, a_min: float, v_min: float) -> float:
    """Velocity cap minimizing traveled distance: (a_max/|a_min|) * v_min."""
    if a_max <= 0.0 or a_min >= 0.0 or v_min <= 0.0:
        raise ValueError("need a_max > 0, a_min < 0 and v_min > 0")
    return (a_max / abs(a_min)) * v_min


def _warn_if_not_critical(bounds: Bounds) -> None:
    crit = critical_vmax(bounds.a_max, bounds.a_min, bounds.v_min)
    if abs(bounds.v_max - crit) > 1e-6 * max(1.0, crit):
        warnings.warn(
            f"v_max {bounds.v_max:.6g} is off the critical ratio value {crit:.6g}; "
            "the distance law below assumes the critical ratio",
            stacklevel=3,
        )


def d_star(bounds: Bounds, ts: float, r_designed: float) -> float:
    """Limit-profile distance at the critical ratio.

    T_s R v_max / a_max^2 - (v_max^2 - v_min^2) / (2 a_max); the limit
    (cycle amplitude to zero) is not physically realizable, and the value
    excludes the base drift of the final ramp, so finite constructions sit
    slightly above it.
    """
    _warn_if_not_critical(bounds)
    value = (
        ts * r_designed * bounds.v_max / bounds.a_max**2
        - (bounds.v_max**2 - bounds.v_min**2) / (2.0 * bounds.a_max)
    )
    if value < 0.0:
        raise ValueError(
            f"distance formula yields {value:.6g} < 0; the parameter regime is "
            "outside the validity of the limit analysis"
        )
    return value


def d_time_formula(bounds: Bounds, ts: float, r_designed: float) -> float:
    """Distance of the periodic time-optimal profile (continuous count)."""
    return (
        r_designed
        * ts
        * (bounds.v_max + bounds.v_min)
        / (2.0 * bounds.a_max * abs(bounds.a_min))
    )


def _d_distance_formula(
    dv: float, v_min: float, a_max: float, a_min_mag: float, ts: float, r: float
) -> float:
    """Closed-form distance of the cycles-then-ramp design, v1 -> v_min limit.

    Includes the final ramp's base drift dv * v_min / a_max; with it the
    derivative in v_max is -v_min/|a_min| + v_max/a_max, which vanishes
    exactly at the critical ratio.
    """
    cycles = (r * ts - a_max * dv) * v_min / (a_min_mag * a_max)
    ramp = dv * v_min / a_max + dv * dv / (2.0 * a_max)
    return cycles + ramp


def distance_optimal_profile(
    bounds: Bounds, grid: SamplingGrid, r_designed: float, v1: float
) -> Profile:
    """Cycles between v_min and v1, then one ramp to v_max.

    M cycles (accelerate at a_max, decelerate at a_min) accumulate energy
    close to the target near the bottom of the velocity band, and a final
    a_max ramp to v_max tops it up; M is the smallest count whose total
    realized energy reaches r_designed.  Only the sample time of ``grid``
    is used; the profile length follows from the construction.
    """
    if not bounds.v_min < v1 <= bounds.v_max:
        raise ValueError(f"need v_min < v1 <= v_max, got v1 = {v1}")
    if r_designed < 0.0:
        raise ValueError("r_designed must be nonnegative")
    ts = grid.ts
    cycle = np.concatenate(
        [
            _phase_levels(v1 - bounds.v_min, ts, bounds.a_max),
            _phase_levels(v1 - bounds.v_min, ts, bounds.a_min),
        ]
    )
    ramp = _phase_levels(bounds.v_max - bounds.v_min, ts, bounds.a_max)
    e_cycle = float(cycle @ cycle)
    e_ramp = float(ramp @ ramp)
    if e_ramp >= r_designed:
        m = 0
    else:
        m = math.ceil((r_designed - e_ramp) / e_cycle - 1e-12)
    total = m * cycle.size + ramp.size
    if total > _MAX_SAMPLES:
        raise ValueError(
            f"v1 = {v1:.6g} is too close to v_min for integer sample counts: "
            f"the construction would need {total} samples"
        )
    a = np.concatenate([np.tile(cycle, m), ramp])
    return profile_from_acceleration(
        a, SamplingGrid(ts=ts, n=total), v0=bounds.v_min
    )


def gap_analysis(
    bounds: Bounds, ts: float, r_designed: float, delta_v_grid
) -> GapReport:
    """Distance gap d_time - d_distance across a grid of velocity ranges.

    a_max, a_min, and v_min come from ``bounds``; each grid entry sets
    v_max = v_min + delta_v.  The gap is a downward-opening quadratic in
    delta_v with axis delta_v_star; under the critical ratio every
    admissible range sits left of the axis, so the gap should be strictly
    increasing on the grid (reported as a verdict, not assumed).
    """
    dv_grid = np.asarray(delta_v_grid, dtype=float)
    if dv_grid.ndim != 1 or dv_grid.size == 0:
        raise ValueError("delta_v_grid must be a nonempty 1-D array")
    if np.any(dv_grid <= 0.0):
        raise ValueError("velocity ranges must be positive")
    a_max, a_mag, v_min = bounds.a_max, abs(bounds.a_min), bounds.v_min
    star = (a_max / a_mag) * v_min - v_min + r_designed * ts / (2.0 * a_mag)
    if np.any(dv_grid > star + 1e-12):
        warnings.warn(
            "delta_v grid extends beyond the symmetry axis; the monotone-gap "
            "claim does not apply there",
            stacklevel=2,
        )
    entries = []
    for dv in dv_grid:
        band = Bounds(
            a_min=bounds.a_min, a_max=a_max, v_min=v_min, v_max=v_min + dv
        )
        dt = d_time_formula(band, ts, r_designed)
        dd = _d_distance_formula(float(dv), v_min, a_max, a_mag, ts, r_designed)
        entries.append(
            GapAnalysis(delta_v=float(dv), d_time=dt, d_distance=dd, delta_d=dt - dd)
        )
    gaps = np.array([e.delta_d for e in entries])
    return GapReport(
        entries=tuple(entries),
        delta_v_star=star,
        strictly_increasing=bool(np.all(np.diff(gaps) > 0.0)),
    )
