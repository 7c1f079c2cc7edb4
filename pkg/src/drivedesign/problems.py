"""Excitation-design problem instances and their lifted representation.

A design instance fixes the sampling grid, actuator, operational bounds and
accuracy target, and asks for an input sequence u maximizing or trading off
excitation energy u^T F^T F u against time or distance.  This module builds
the constraint system

    u^T F^T F u >= R_designed            (quality)
    a_min <= (F u)_k <= a_max            (acceleration)
    v_min <= v0 + Ts (G F u)_k <= v_max  (velocity)
    u_min <= u_k <= u_max                (input)
    Ts^2 (H_N F u) + v0 N Ts <= d_max    (distance, optional)

checks candidate inputs against it by direct simulation, and rewrites the
whole system linearly in the lifted variables (U, u) with U standing in for
u u^T, the form used by the certified branch-and-bound solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from drivedesign.dynamics import (
    ActuatorModel,
    SamplingGrid,
    build_actuator_toeplitz,
    build_kinematic_matrices,
    make_profile,
)
from drivedesign.estimator import QualityTarget

__all__ = [
    "PiecewiseBound",
    "Bounds",
    "DesignProblem",
    "ConstraintSystem",
    "FeasibilityReport",
    "LinearRow",
    "LiftedProblem",
    "RankOneReport",
    "assemble_constraints",
    "check_feasibility",
    "lift_problem",
    "verify_rank_one",
    "lift_point",
]

OBJECTIVES = ("min_time", "min_distance", "max_accuracy")


@dataclass(frozen=True)
class PiecewiseBound:
    """Piecewise-constant bound over distance.

    ``values[i]`` applies on [breaks[i], breaks[i+1]); the last value extends
    to infinity.  ``breaks`` must start at 0 and increase strictly.
    """

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "breaks", np.asarray(self.breaks, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.breaks.ndim != 1 or self.breaks.shape != self.values.shape:
            raise ValueError("breaks and values must be 1-D arrays of equal length")
        if self.breaks.size == 0 or self.breaks[0] != 0.0:
            raise ValueError("breaks must start at distance 0")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breaks must increase strictly")

    def value_at(self, d):
        """Bound value(s) at distance(s) ``d``."""
        idx = np.searchsorted(self.breaks, np.asarray(d, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, self.values.size - 1)]


@dataclass(frozen=True)
class Bounds:
    """Operational limits on acceleration, velocity, input, and distance.

    Input limits default to the acceleration limits (unity static gain).
    ``varying`` optionally overrides a_min/a_max/v_min/v_max with
    distance-dependent piecewise-constant values.
    """

    a_min: float
    a_max: float
    v_min: float
    v_max: float
    u_min: float | None = None
    u_max: float | None = None
    d_max: float | None = None
    varying: dict[str, PiecewiseBound] | None = None

    def __post_init__(self):
        if not (self.a_min < 0.0 < self.a_max):
            raise ValueError("need a_min < 0 < a_max")
        if self.v_min > self.v_max:
            raise ValueError("need v_min <= v_max")
        if self.u_min is None:
            object.__setattr__(self, "u_min", self.a_min)
        if self.u_max is None:
            object.__setattr__(self, "u_max", self.a_max)
        if self.u_min > self.u_max:
            raise ValueError("need u_min <= u_max")
        if self.d_max is not None and self.d_max <= 0.0:
            raise ValueError("d_max must be positive when given")
        if self.varying:
            unknown = set(self.varying) - {"a_min", "a_max", "v_min", "v_max"}
            if unknown:
                raise ValueError(f"varying overrides not recognized: {sorted(unknown)}")

    @property
    def has_varying(self) -> bool:
        return bool(self.varying)

    def at_distance(self, d) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per-sample (a_min, a_max, v_min, v_max) at distances ``d``."""
        d = np.asarray(d, dtype=float)
        out = []
        for name in ("a_min", "a_max", "v_min", "v_max"):
            if self.varying and name in self.varying:
                out.append(np.asarray(self.varying[name].value_at(d), dtype=float))
            else:
                out.append(np.full(d.shape, getattr(self, name)))
        return tuple(out)


@dataclass(frozen=True)
class DesignProblem:
    """One excitation-design instance.

    ``objective`` selects what the solver trades excitation against:
    "min_time" (shortest horizon reaching the target), "min_distance"
    (least distance traveled at fixed horizon), or "max_accuracy" (largest
    excitation; the target's r_designed is then an output, not an input).
    """

    objective: str
    grid: SamplingGrid
    actuator: ActuatorModel
    bounds: Bounds
    target: QualityTarget
    v0: float = 0.0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.objective != "max_accuracy":
            if self.target.r_designed is None or self.target.r_designed < 0.0:
                raise ValueError(f"objective {self.objective!r} requires target.r_designed >= 0")

    @property
    def r_designed(self) -> float | None:
        return self.target.r_designed


@dataclass(frozen=True)
class ConstraintSystem:
    """Linear rows A u <= b plus the quadratic quality requirement.

    Rows are ordered: acceleration upper/lower, velocity upper/lower, input
    upper/lower (n each), then the optional distance row.  ``quality`` holds
    Q = F^T F for the row u^T Q u >= r_designed (r_designed is None for
    max_accuracy instances, where excitation is the objective).
    """

    a_ub: np.ndarray
    b_ub: np.ndarray
    labels: list[str]
    quality: np.ndarray
    r_designed: float | None
    F: np.ndarray = field(repr=False)
    u_lo: np.ndarray = field(repr=False)
    u_hi: np.ndarray = field(repr=False)

    def residuals(self, u: np.ndarray) -> np.ndarray:
        """Row values A u - b; positive entries are violations."""
        return self.a_ub @ np.asarray(u, dtype=float) - self.b_ub


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-family worst violations of a candidate input, from simulation."""

    feasible: bool
    violations: dict[str, float]
    first_violation_index: dict[str, int | None]
    r_achieved: float

    @property
    def worst_violation(self) -> float:
        return max(self.violations.values(), default=0.0)


def _eager_reject(problem: DesignProblem) -> None:
    b = problem.bounds
    v_min0, v_max0 = b.v_min, b.v_max
    if b.varying:
        if "v_min" in b.varying:
            v_min0 = float(b.varying["v_min"].value_at(0.0))
        if "v_max" in b.varying:
            v_max0 = float(b.varying["v_max"].value_at(0.0))
    if not (v_min0 <= problem.v0 <= v_max0):
        raise ValueError(
            f"initial velocity {problem.v0} lies outside [{v_min0}, {v_max0}]: "
            "the problem is infeasible by construction"
        )


def assemble_constraints(
    problem: DesignProblem, distances: np.ndarray | None = None
) -> ConstraintSystem:
    """Build the constraint system of a design instance in matrix form.

    For distance-varying bounds the rows are evaluated at the supplied
    per-sample ``distances`` (all-zero when omitted); callers iterate
    assembly and solving to a fixed point.

    Raises
    ------
    ValueError if the instance is infeasible by construction (initial
    velocity outside the velocity band).
    """
    _eager_reject(problem)
    grid, b = problem.grid, problem.bounds
    n, ts, v0 = grid.n, grid.ts, problem.v0
    if distances is None:
        distances = np.zeros(n)
    distances = np.asarray(distances, dtype=float)
    if distances.shape != (n,):
        raise ValueError(f"distances must have shape ({n},), got {distances.shape}")
    a_min_k, a_max_k, v_min_k, v_max_k = b.at_distance(distances)
    F = build_actuator_toeplitz(problem.actuator, grid)
    G, H = build_kinematic_matrices(grid)
    GF = G @ F
    rows, rhs, labels = [], [], []
    for k in range(n):
        rows.append(F[k])
        rhs.append(a_max_k[k])
        labels.append(f"accel_upper[{k + 1}]")
    for k in range(n):
        rows.append(-F[k])
        rhs.append(-a_min_k[k])
        labels.append(f"accel_lower[{k + 1}]")
    for k in range(n):
        rows.append(ts * GF[k])
        rhs.append(v_max_k[k] - v0)
        labels.append(f"vel_upper[{k + 1}]")
    for k in range(n):
        rows.append(-ts * GF[k])
        rhs.append(v0 - v_min_k[k])
        labels.append(f"vel_lower[{k + 1}]")
    eye = np.eye(n)
    for k in range(n):
        rows.append(eye[k])
        rhs.append(b.u_max)
        labels.append(f"input_upper[{k + 1}]")
    for k in range(n):
        rows.append(-eye[k])
        rhs.append(-b.u_min)
        labels.append(f"input_lower[{k + 1}]")
    if b.d_max is not None:
        rows.append(ts * ts * (H[n - 1] @ F))
        rhs.append(b.d_max - v0 * n * ts)
        labels.append("distance")
    return ConstraintSystem(
        a_ub=np.array(rows),
        b_ub=np.array(rhs),
        labels=labels,
        quality=F.T @ F,
        r_designed=problem.target.r_designed if problem.objective != "max_accuracy" else None,
        F=F,
        u_lo=np.full(n, b.u_min),
        u_hi=np.full(n, b.u_max),
    )


def check_feasibility(
    u: np.ndarray,
    problem: DesignProblem,
    tol: float = 1e-9,
    distances: np.ndarray | None = None,
) -> FeasibilityReport:
    """Evaluate a candidate input against all constraints by simulation.

    The trajectory is produced by the dynamics module, not by the matrix
    rows, so this is an independent cross-check of assemble_constraints.
    Distance-varying bounds are evaluated at the candidate's own simulated
    distances unless a frozen ``distances`` assignment is supplied; the
    fixed-point callers pass the iterate their rows were assembled at so
    that verification and relaxation agree mid-iteration.
    """
    u = np.asarray(u, dtype=float)
    grid, b = problem.grid, problem.bounds
    if u.shape != (grid.n,):
        raise ValueError(f"u must have shape ({grid.n},), got {u.shape}")
    prof = make_profile(u, problem.actuator, grid, v0=problem.v0)
    d_ref = prof.d if distances is None else np.asarray(distances, dtype=float)
    a_min_k, a_max_k, v_min_k, v_max_k = b.at_distance(d_ref)
    checks = {
        "accel_upper": prof.a - a_max_k,
        "accel_lower": a_min_k - prof.a,
        "vel_upper": prof.v - v_max_k,
        "vel_lower": v_min_k - prof.v,
        "input_upper": u - b.u_max,
        "input_lower": b.u_min - u,
    }
    violations: dict[str, float] = {}
    first_index: dict[str, int | None] = {}
    for name, residual in checks.items():
        worst = float(np.max(residual))
        violations[name] = max(worst, 0.0)
        bad = np.nonzero(residual > tol)[0]
        first_index[name] = int(bad[0]) + 1 if bad.size else None
    if b.d_max is not None:
        over = float(prof.d[-1] - b.d_max)
        violations["distance"] = max(over, 0.0)
        first_index["distance"] = grid.n if over > tol else None
    r_achieved = prof.excitation
    if problem.objective != "max_accuracy" and problem.target.r_designed is not None:
        short = problem.target.r_designed - r_achieved
        violations["quality"] = max(short, 0.0)
        first_index["quality"] = None
    feasible = all(v <= tol for v in violations.values())
    return FeasibilityReport(
        feasible=feasible,
        violations=violations,
        first_violation_index=first_index,
        r_achieved=r_achieved,
    )


def _tri_index(i: int, j: int, n: int) -> int:
    """Position of U[i, j] (i <= j) in row-major upper-triangle packing."""
    return i * n - i * (i - 1) // 2 + (j - i)


def lift_point(u: np.ndarray) -> np.ndarray:
    """Map u to the lifted vector z = [vech(u u^T), u]."""
    u = np.asarray(u, dtype=float)
    n = u.size
    U = np.outer(u, u)
    iu, ju = np.triu_indices(n)
    return np.concatenate([U[iu, ju], u])


def _trace_weights(S: np.ndarray, n: int) -> np.ndarray:
    """Weights w with w . vech(U) = Tr(U S) for symmetric S."""
    iu, ju = np.triu_indices(n)
    w = S[iu, ju].astype(float).copy()
    w[iu != ju] *= 2.0
    return w


@dataclass(frozen=True)
class LinearRow:
    """One linear inequality coeffs . z <= rhs over z = [vech(U), u]."""

    coeffs: np.ndarray
    rhs: float
    label: str


@dataclass(frozen=True)
class LiftedProblem:
    """The design instance written linearly in (U, u) with U = u u^T relaxed.

    ``z`` packs the upper triangle of U row-major followed by u, so the
    dimension is n(n+1)/2 + n (plus the constant 1 in the semidefinite
    block [[U, u], [u^T, 1]]).  ``quality_weights . z`` evaluates
    Tr(U F^T F).
    """

    n: int
    cost: np.ndarray
    rows: list[LinearRow]
    quality_weights: np.ndarray
    r_designed: float | None

    def __post_init__(self):
        dim = self.n * (self.n + 1) // 2 + self.n
        if self.cost.shape != (dim,) or self.quality_weights.shape != (dim,):
            raise ValueError("cost and quality_weights must have length n(n+1)/2 + n")
        for row in self.rows:
            if row.coeffs.shape != (dim,):
                raise ValueError(f"row {row.label!r} has wrong dimension")

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2 + self.n

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unpack z into (U, u) with U symmetrized from its upper triangle."""
        z = np.asarray(z, dtype=float)
        n = self.n
        iu, ju = np.triu_indices(n)
        U = np.zeros((n, n))
        U[iu, ju] = z[: iu.size]
        U = U + U.T - np.diag(np.diag(U))
        return U, z[iu.size :]

    def psd_block(self, z: np.ndarray) -> np.ndarray:
        """The (n+1) x (n+1) block [[U, u], [u^T, 1]] at the point z."""
        U, u = self.split(z)
        block = np.empty((self.n + 1, self.n + 1))
        block[: self.n, : self.n] = U
        block[: self.n, self.n] = u
        block[self.n, : self.n] = u
        block[self.n, self.n] = 1.0
        return block


def _product_rows_z(
    F: np.ndarray,
    GF: np.ndarray,
    ts: float,
    v0: float,
    a_lo: np.ndarray,
    a_hi: np.ndarray,
    v_lo: np.ndarray,
    v_hi: np.ndarray,
) -> list[LinearRow]:
    """Build the per-sample product rows over z = (vech U, u).

    Each two-sided bound lo <= s(k) <= hi on an affine signal
    s = offset + scale * (w . u) is encoded as (s - lo)(s - hi) <= 0 with
    scale^2 Tr(U w w^T) standing in for the square; exact on rank-one points.
    Bounds are per-sample arrays so distance-varying assignments fit too.
    """
    n = F.shape[0]
    ntri = n * (n + 1) // 2
    dim = ntri + n
    rows: list[LinearRow] = []

    def product_row(w, offset, scale, lo, hi, label):
        coeffs = np.zeros(dim)
        coeffs[:ntri] = scale * scale * _trace_weights(np.outer(w, w), n)
        coeffs[ntri:] = (2.0 * offset - lo - hi) * scale * w
        rows.append(LinearRow(coeffs=coeffs, rhs=-(offset - lo) * (offset - hi), label=label))

    for k in range(n):
        product_row(F[k], 0.0, 1.0, a_lo[k], a_hi[k], f"accel_product[{k + 1}]")
    for k in range(n):
        product_row(GF[k], v0, ts, v_lo[k], v_hi[k], f"vel_product[{k + 1}]")
    return rows


def lift_problem(problem: DesignProblem) -> LiftedProblem:
    """Rewrite every constraint linearly in the lifted variables (U, u).

    Each two-sided amplitude bound becomes one product row, exact on
    rank-one points: with a = F u and A = F U F^T,

        A(k,k) - (a_min + a_max) a(k) + a_min a_max <= 0,

    and analogously for velocity through the cumulative-sum rows.  A
    candidate u satisfies the original system iff (u u^T, u) satisfies
    every lifted row.

    Raises
    ------
    ValueError for distance-varying bounds (constant bounds only).
    """
    if problem.bounds.has_varying:
        raise ValueError("lifting supports constant bounds only")
    _eager_reject(problem)
    grid, b = problem.grid, problem.bounds
    n, ts, v0 = grid.n, grid.ts, problem.v0
    F = build_actuator_toeplitz(problem.actuator, grid)
    G, H = build_kinematic_matrices(grid)
    GF = G @ F
    ntri = n * (n + 1) // 2
    dim = ntri + n
    full = np.full
    rows = _product_rows_z(
        F, GF, ts, v0,
        full(n, b.a_min), full(n, b.a_max), full(n, b.v_min), full(n, b.v_max),
    )
    eye = np.eye(n)
    for k in range(n):
        coeffs = np.zeros(dim)
        coeffs[ntri:] = eye[k]
        rows.append(LinearRow(coeffs=coeffs, rhs=b.u_max, label=f"input_upper[{k + 1}]"))
        coeffs = np.zeros(dim)
        coeffs[ntri:] = -eye[k]
        rows.append(LinearRow(coeffs=coeffs, rhs=-b.u_min, label=f"input_lower[{k + 1}]"))
    if b.d_max is not None:
        coeffs = np.zeros(dim)
        coeffs[ntri:] = ts * ts * (H[n - 1] @ F)
        rows.append(
            LinearRow(coeffs=coeffs, rhs=b.d_max - v0 * n * ts, label="distance")
        )
    Q = F.T @ F
    quality_weights = np.zeros(dim)
    quality_weights[:ntri] = _trace_weights(Q, n)
    cost = np.zeros(dim)
    if problem.objective == "min_distance":
        cost[ntri:] = ts * ts * (H[n - 1] @ F)
    elif problem.objective == "max_accuracy":
        cost = -quality_weights
    return LiftedProblem(
        n=n,
        cost=cost,
        rows=rows,
        quality_weights=quality_weights,
        r_designed=problem.target.r_designed if problem.objective != "max_accuracy" else None,
    )


@dataclass(frozen=True)
class RankOneReport:
    is_rank_one: bool
    u_recovered: np.ndarray
    nuclear_norm: float


def verify_rank_one(U: np.ndarray, u: np.ndarray, tol: float = 1e-8) -> RankOneReport:
    """Check whether the lifted block [[U, u], [u^T, 1]] is rank one.

    Rank one holds when the second-largest eigenvalue magnitude is at most
    ``tol`` times the largest; the leading eigenvector then recovers u.
    The nuclear norm of the block (sum of singular values) is reported for
    diagnostics; it equals 1 + ||u||^2 exactly at a lift point.
    """
    U = np.asarray(U, dtype=float)
    u = np.asarray(u, dtype=float)
    n = u.size
    if U.shape != (n, n):
        raise ValueError(f"U must be {n} x {n}, got {U.shape}")
    if not np.allclose(U, U.T, rtol=1e-9, atol=1e-12):
        raise ValueError("U must be symmetric")
    block = np.empty((n + 1, n + 1))
    block[:n, :n] = U
    block[:n, n] = u
    block[n, :n] = u
    block[n, n] = 1.0
    w, V = np.linalg.eigh(block)
    order = np.argsort(np.abs(w))[::-1]
    lead = abs(w[order[0]])
    second = abs(w[order[1]])
    is_rank_one = second <= tol * lead
    vec = V[:, order[0]]
    u_rec = vec[:-1] / vec[-1] if abs(vec[-1]) > 1e-300 else np.full(n, np.nan)
    return RankOneReport(
        is_rank_one=bool(is_rank_one),
        u_recovered=u_rec,
        nuclear_norm=float(np.sum(np.abs(w))),
    )
