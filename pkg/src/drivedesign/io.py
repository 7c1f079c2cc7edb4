"""Configuration, shipped parameter presets, file formats, and design orchestration.

Config files are flat ``key = value`` text with dotted namespaces; velocities
may be given in m/s or, with an explicit ``_kmh`` suffix, in km/h (divided by
3.6 exactly).  Everything is normalized to SI on load.  Profile and drive-log
files are plain CSV; reports reuse the ``key = value`` syntax.  All numeric
fields are written with repr-exact precision, so write-then-read is lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from drivedesign.dynamics import ActuatorModel, Profile, SamplingGrid, make_profile
from drivedesign.estimator import DriveLog, QualityTarget
from drivedesign.problems import Bounds, DesignProblem, LiftedProblem
from drivedesign.simulate import SimConfig
from drivedesign.solver import (
    ProfileParam,
    SolveReport,
    max_excitation,
    solve_fixed_horizon,
    solve_min_time,
    solve_profile_parameterized,
)

__all__ = [
    "ParseError",
    "PRESETS",
    "RunConfig",
    "design_from_config",
    "load_config",
    "parse_config_text",
    "read_drive_log",
    "read_profile_file",
    "read_report_file",
    "realize_profile",
    "write_drive_log",
    "write_lifted_file",
    "write_profile_file",
    "write_report_file",
]


class ParseError(ValueError):
    """Malformed config or data file; carries origin and line number."""

    def __init__(self, origin: str, lineno: int | None, message: str):
        self.origin = origin
        self.lineno = lineno
        where = origin if lineno is None else f"{origin}:{lineno}"
        super().__init__(f"{where}: {message}")


# Schema: every accepted key and its value kind.  Unknown keys are errors.
_FLOAT_KEYS = {
    "grid.ts",
    "v0",
    "v0_kmh",
    "bounds.a_min",
    "bounds.a_max",
    "bounds.v_min",
    "bounds.v_min_kmh",
    "bounds.v_max",
    "bounds.v_max_kmh",
    "bounds.u_min",
    "bounds.u_max",
    "bounds.d_max",
    "actuator.pole",
    "actuator.pole_ref",
    "actuator.pole_ref_ts",
    "target.m_nominal",
    "target.sigma_e2",
    "target.alpha",
    "target.r_designed",
    "solver.tol",
    "sim.m_true",
    "sim.delta_true",
    "sim.sigma_e",
    "sim.sigma_a_meas",
}
_INT_KEYS = {
    "grid.n",
    "grid.n_cap",
    "target.n_params",
    "solver.node_budget",
    "solver.n_starts",
    "solver.max_iter",
    "solver.seed",
    "sim.trials",
    "sim.seed",
}
_STR_KEYS = {"objective", "solver.method"}
_CHOICES = {
    "objective": ("min_time", "min_distance", "max_accuracy"),
    "solver.method": ("profile", "global"),
}
# A velocity given in one unit silently replaces the other form when
# overlaid from a later source; within one source both forms conflict.
_UNIT_PAIRS = {
    "v0": "v0_kmh",
    "bounds.v_min": "bounds.v_min_kmh",
    "bounds.v_max": "bounds.v_max_kmh",
}
_UNIT_PAIRS.update({v: k for k, v in _UNIT_PAIRS.items()})

# Desk presets.  The source operating points quote the actuator pole at a
# 10 ms sampling interval; ``pole_ref`` is rescaled to the configured grid
# as pole_ref ** (ts / pole_ref_ts), preserving the physical time constant.
PRESETS: dict[str, dict[str, float | int | str]] = {
    "paper-vii-a": {
        "solver.method": "profile",
        "grid.ts": 0.5,
        "bounds.a_min": -0.3,
        "bounds.a_max": 0.9,
        "bounds.v_min_kmh": 4.0,
        "bounds.v_max_kmh": 12.0,
        "v0_kmh": 4.0,
        "actuator.pole_ref": 0.979,
        "actuator.pole_ref_ts": 0.01,
        "target.m_nominal": 15500.0,
        "target.sigma_e2": 1600.0,
        "target.alpha": 0.99,
        "target.n_params": 2,
        "target.r_designed": 600.0,
    },
    "paper-vii-b": {
        "solver.method": "profile",
        "grid.ts": 0.5,
        "bounds.a_min": -0.23,
        "bounds.a_max": 0.9,
        "bounds.v_min_kmh": 4.0,
        "bounds.v_max_kmh": 23.0,
        "v0_kmh": 4.0,
        "actuator.pole_ref": 0.979,
        "actuator.pole_ref_ts": 0.01,
        "target.m_nominal": 15500.0,
        "target.sigma_e2": 1600.0,
        "target.alpha": 0.99,
        "target.n_params": 2,
        "target.r_designed": 600.0,
    },
    "paper-viii": {
        "solver.method": "profile",
        "grid.ts": 0.5,
        "bounds.a_min": -0.3,
        "bounds.a_max": 0.9,
        "bounds.v_min_kmh": 4.0,
        "bounds.v_max_kmh": 12.0,
        "v0_kmh": 4.0,
        "actuator.pole_ref": 0.979,
        "actuator.pole_ref_ts": 0.01,
        "target.m_nominal": 15500.0,
        "target.sigma_e2": 1600.0,
        "target.alpha": 0.99,
        "target.n_params": 2,
        "target.r_designed": 600.0,
        "sim.m_true": 15500.0,
        "sim.delta_true": 200.0,
        "sim.sigma_e": 40.0,
        "sim.sigma_a_meas": 0.0,
        "sim.trials": 1000,
        "sim.seed": 0,
    },
}


def _convert(key: str, value: str, origin: str, lineno: int | None):
    if key in _STR_KEYS:
        if value not in _CHOICES[key]:
            raise ParseError(
                origin, lineno,
                f"key {key!r} must be one of {_CHOICES[key]}, got {value!r}",
            )
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        return float(value)
    except ValueError:
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ParseError(origin, lineno, f"key {key!r} needs {kind}, got {value!r}") from None


def parse_config_text(text: str, origin: str = "config") -> dict:
    """Parse flat key = value text into {key: (value, lineno)}."""
    entries: dict[str, tuple] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(origin, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
            raise ParseError(origin, lineno, f"unknown key {key!r}")
        if key in entries:
            raise ParseError(origin, lineno, f"duplicate key {key!r}")
        if _UNIT_PAIRS.get(key) in entries:
            raise ParseError(
                origin, lineno,
                f"key {key!r} conflicts with {_UNIT_PAIRS[key]!r}; give one unit only",
            )
        entries[key] = (_convert(key, value, origin, lineno), lineno)
    return entries


def _overlay(base: dict, extra: dict) -> dict:
    merged = dict(base)
    for key, item in extra.items():
        merged.pop(_UNIT_PAIRS.get(key), None)
        merged[key] = item
    return merged


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run configuration, SI units throughout.

    Sections a config never mentioned stay None; each command validates the
    presence of what it actually needs via :meth:`require`.
    """

    objective: str | None
    method: str
    ts: float | None
    n: int | None
    n_cap: int
    v0: float | None
    bounds: Bounds | None
    pole: float | None
    target: QualityTarget | None
    tol: float
    node_budget: int
    n_starts: int
    max_iter: int
    seed: int
    sim: SimConfig | None

    def require(self, **fields):
        for name, why in fields.items():
            if getattr(self, name) is None:
                raise ParseError("config", None, f"missing {name!r}, required {why}")

    def design_problem(self, objective: str, n: int) -> DesignProblem:
        self.require(ts="to build the sampling grid", bounds="to bound the design",
                     pole="to model the actuator", target="to set the quality target")
        return DesignProblem(
            objective=objective,
            grid=SamplingGrid(ts=self.ts, n=n),
            actuator=ActuatorModel(p=self.pole),
            bounds=self.bounds,
            target=self.target,
            v0=self.v0 if self.v0 is not None else self.bounds.v_min,
        )


def _resolve(entries: dict) -> RunConfig:
    values = {k: v for k, (v, _) in entries.items()}
    lines = {k: ln for k, (_, ln) in entries.items()}

    def take(key, default=None):
        if key + "_kmh" in values:
            return values[key + "_kmh"] / 3.6
        return values.get(key, default)

    bounds = None
    bound_keys = ("bounds.a_min", "bounds.a_max")
    have_any = any(k in values for k in bound_keys) or any(
        take(k) is not None for k in ("bounds.v_min", "bounds.v_max")
    )
    if have_any:
        missing = [k for k in bound_keys if k not in values]
        missing += [k for k in ("bounds.v_min", "bounds.v_max") if take(k) is None]
        if missing:
            raise ParseError("config", None, f"incomplete bounds: missing {missing}")
        try:
            bounds = Bounds(
                a_min=values["bounds.a_min"],
                a_max=values["bounds.a_max"],
                v_min=take("bounds.v_min"),
                v_max=take("bounds.v_max"),
                u_min=values.get("bounds.u_min"),
                u_max=values.get("bounds.u_max"),
                d_max=values.get("bounds.d_max"),
            )
        except ValueError as exc:
            raise ParseError("config", None, f"invalid bounds: {exc}") from exc

    pole = values.get("actuator.pole")
    if "actuator.pole_ref" in values:
        if pole is not None:
            raise ParseError(
                "config", lines.get("actuator.pole_ref"),
                "give either actuator.pole or actuator.pole_ref, not both",
            )
        ts = values.get("grid.ts")
        if ts is None:
            raise ParseError("config", None, "actuator.pole_ref needs grid.ts")
        ref_ts = values.get("actuator.pole_ref_ts", 0.01)
        pole = values["actuator.pole_ref"] ** (ts / ref_ts)

    target = None
    if "target.m_nominal" in values:
        if "target.sigma_e2" not in values:
            raise ParseError("config", None, "target.m_nominal needs target.sigma_e2")
        try:
            target = QualityTarget(
                m_nominal=values["target.m_nominal"],
                sigma_e2=values["target.sigma_e2"],
                alpha=values.get("target.alpha", 0.99),
                n_params=values.get("target.n_params", 1),
                r_designed=values.get("target.r_designed"),
            )
        except ValueError as exc:
            raise ParseError("config", None, f"invalid quality target: {exc}") from exc

    sim = None
    if "sim.m_true" in values:
        if "sim.sigma_e" not in values:
            raise ParseError("config", None, "sim.m_true needs sim.sigma_e")
        try:
            sim = SimConfig(
                m_true=values["sim.m_true"],
                delta_true=values.get("sim.delta_true", 0.0),
                sigma_e=values["sim.sigma_e"],
                sigma_a_meas=values.get("sim.sigma_a_meas", 0.0),
                trials=values.get("sim.trials", 100),
                seed=values.get("sim.seed", 0),
            )
        except ValueError as exc:
            raise ParseError("config", None, f"invalid simulation settings: {exc}") from exc

    return RunConfig(
        objective=values.get("objective"),
        method=values.get("solver.method", "profile"),
        ts=values.get("grid.ts"),
        n=values.get("grid.n"),
        n_cap=values.get("grid.n_cap", 400_000),
        v0=take("v0"),
        bounds=bounds,
        pole=pole,
        target=target,
        tol=values.get("solver.tol", 1e-4),
        node_budget=values.get("solver.node_budget", 200_000),
        n_starts=values.get("solver.n_starts", 1),
        max_iter=values.get("solver.max_iter", 0),
        seed=values.get("solver.seed", 0),
        sim=sim,
    )


def load_config(
    path: str | Path | None = None,
    preset: str | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Build a RunConfig from a preset, a config file, and overrides, in
    that order of increasing precedence."""
    entries: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ParseError(
                "preset", None,
                f"unknown preset {preset!r}; available: {sorted(PRESETS)}",
            )
        source = {k: (v, 0) for k, v in PRESETS[preset].items()}
        entries = _overlay(entries, source)
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ParseError(str(p), None, f"cannot read config: {exc}") from exc
        entries = _overlay(entries, parse_config_text(text, origin=str(p)))
    if overrides:
        entries = _overlay(entries, {k: (v, 0) for k, v in overrides.items()})
    return _resolve(entries)


# ---------------------------------------------------------------------------
# Design orchestration

# Cycle-ceiling sweep for distance minimization: fractions of the velocity
# band tried as the hysteresis amplitude.  Too small an amplitude starves
# the excitation rate (the actuator never settles inside a short segment),
# too large drives the mean speed up; the sweep brackets the knee.
_AMPLITUDE_FRACTIONS = (0.2, 0.3, 0.4, 0.55, 0.75, 1.0)


class _PlanBudget(Exception):
    def __init__(self, achieved: float, cap: int):
        self.achieved = achieved
        self.cap = cap
        super().__init__(
            f"excitation tops out at {achieved:.6g} within the {cap}-sample planning cap"
        )


def _plan_switching(
    bounds: Bounds,
    pole: float,
    ts: float,
    v0: float,
    r_designed: float | None,
    v_hi: float,
    v_lo: float,
    cap: int,
    n_fixed: int | None = None,
) -> tuple[ProfileParam, int]:
    """Closed-loop bang-bang plan between two velocity rails.

    Alternates the input between its extremes, switching exactly when one
    more step in the current mode would make the post-switch velocity
    excursion (closed form of the first-order lag decay) leave the rails.
    Runs until the accumulated excitation exceeds the target with 2%
    margin, or for exactly ``n_fixed`` samples.
    """
    u_hi, u_lo = bounds.u_max, bounds.u_min
    if not (u_lo < 0.0 < u_hi):
        raise ParseError(
            "config", None,
            f"profile planning needs u_min < 0 < u_max, got [{u_lo}, {u_hi}]",
        )
    log_p = math.log(pole)

    def peak(a_now: float, v_now: float) -> float:
        # velocity still climbs while the lagged response to u_lo stays > 0
        if a_now <= 0.0:
            return v_now
        j = int(math.floor(math.log(-u_lo / (a_now - u_lo)) / log_p))
        if j < 1:
            return v_now
        geo = pole * (1.0 - pole**j) / (1.0 - pole)
        return v_now + ts * (j * u_lo + (a_now - u_lo) * geo)

    def trough(a_now: float, v_now: float) -> float:
        if a_now >= 0.0:
            return v_now
        j = int(math.floor(math.log(u_hi / (u_hi - a_now)) / log_p))
        if j < 1:
            return v_now
        geo = pole * (1.0 - pole**j) / (1.0 - pole)
        return v_now + ts * (j * u_hi + (a_now - u_hi) * geo)

    a, v, energy = 0.0, v0, 0.0
    mode = 1
    modes: list[int] = []
    limit = cap if n_fixed is None else min(cap, n_fixed)
    for _ in range(limit):
        if n_fixed is None and r_designed is not None and energy >= 1.02 * r_designed:
            break
        u = u_hi if mode == 1 else u_lo
        a_next = pole * a + (1.0 - pole) * u
        v_next = v + ts * a_next
        if mode == 1 and peak(a_next, v_next) > v_hi - 1e-9:
            mode = -1
        elif mode == -1 and trough(a_next, v_next) < v_lo + 1e-9:
            mode = 1
        u = u_hi if mode == 1 else u_lo
        a = pole * a + (1.0 - pole) * u
        v = v + ts * a
        energy += a * a
        modes.append(mode)
    else:
        if n_fixed is None:
            raise _PlanBudget(energy, limit)

    mode_arr = np.array(modes)
    flips = np.nonzero(np.diff(mode_arr))[0] + 2
    levels = [u_hi if mode_arr[0] == 1 else u_lo]
    for f in flips:
        levels.append(u_hi if mode_arr[f - 1] == 1 else u_lo)
    return ProfileParam(switch_times=flips, levels=np.array(levels)), mode_arr.size


def _infeasible_report(note: str) -> SolveReport:
    return SolveReport(
        u_star=None,
        objective_value=math.inf,
        lower_bound=-math.inf,
        upper_bound=math.inf,
        gap=math.nan,
        nodes_explored=0,
        status="infeasible",
        note=note,
    )


def realize_profile(cfg: RunConfig, u: np.ndarray) -> Profile:
    """Simulate a designed input through the configured actuator."""
    cfg.require(ts="to build the sampling grid", pole="to model the actuator")
    if cfg.v0 is None:
        cfg.require(bounds="to recover the start velocity")
    v0 = cfg.v0 if cfg.v0 is not None else cfg.bounds.v_min
    grid = SamplingGrid(ts=cfg.ts, n=int(np.asarray(u).size))
    return make_profile(np.asarray(u, dtype=float), ActuatorModel(p=cfg.pole), grid, v0)


def _design_profile_method(cfg: RunConfig, objective: str) -> SolveReport:
    cfg.require(bounds="to plan the profile", ts="to plan the profile",
                pole="to plan the profile", target="to set the excitation target")
    b = cfg.bounds
    v0 = cfg.v0 if cfg.v0 is not None else b.v_min
    if objective == "max_accuracy":
        if cfg.n is None:
            raise ParseError("config", None, "max_accuracy needs grid.n (fixed horizon)")
        amps: tuple[float | None, ...] = (None,)
    elif objective == "min_distance":
        amps = tuple(f * (b.v_max - b.v_min) for f in _AMPLITUDE_FRACTIONS)
    else:
        amps = (None,)

    best: SolveReport | None = None
    for amp in amps:
        v_hi = b.v_max if amp is None else min(b.v_max, b.v_min + amp)
        try:
            template, n = _plan_switching(
                b, cfg.pole, cfg.ts, v0,
                cfg.target.r_designed if objective != "max_accuracy" else None,
                v_hi, b.v_min, cfg.n_cap,
                n_fixed=cfg.n if objective == "max_accuracy" else None,
            )
        except _PlanBudget as exc:
            return _infeasible_report(str(exc))
        problem = cfg.design_problem(objective, n)
        try:
            report = solve_profile_parameterized(
                problem, template,
                n_starts=cfg.n_starts, max_iter=cfg.max_iter, seed=cfg.seed,
            )
        except ValueError as exc:
            report = _infeasible_report(str(exc))
        if best is None or report.objective_value < best.objective_value:
            best = report
    assert best is not None
    return best


def _design_global_method(cfg: RunConfig, objective: str) -> SolveReport:
    if cfg.n is None:
        raise ParseError("config", None, "solver.method global needs grid.n")
    problem = cfg.design_problem(objective, cfg.n)
    if objective == "min_time":
        n_star, report = solve_min_time(
            problem, range(1, cfg.n + 1), tol=cfg.tol, node_budget=cfg.node_budget
        )
        if n_star is None:
            return report
        # the bisection certifies n_star as the minimal feasible horizon,
        # so the time objective is exact; the capacity bounds go in the note
        t_star = n_star * cfg.ts
        note = (
            f"minimal horizon n = {n_star}; certified excitation in "
            f"[{report.lower_bound:.12g}, {report.upper_bound:.12g}]"
        )
        if report.note:
            note = f"{report.note}; {note}"
        return SolveReport(
            u_star=report.u_star,
            objective_value=t_star,
            lower_bound=t_star,
            upper_bound=t_star,
            gap=0.0,
            nodes_explored=report.nodes_explored,
            status=report.status,
            note=note,
        )
    if objective == "min_distance":
        return solve_fixed_horizon(problem, tol=cfg.tol, node_budget=cfg.node_budget)
    return max_excitation(problem, tol=cfg.tol, node_budget=cfg.node_budget)


def design_from_config(cfg: RunConfig, objective: str | None = None) -> SolveReport:
    """Run the configured design and return its report.

    The profile method plans a hysteresis template (sweeping the cycle
    ceiling for distance minimization) and verifies it through the
    template search; the global method calls the certified solver on the
    configured horizon.
    """
    obj = objective or cfg.objective
    if obj is None:
        raise ParseError("config", None, "no objective given (flag or config key)")
    if cfg.method == "global":
        return _design_global_method(cfg, obj)
    return _design_profile_method(cfg, obj)


# ---------------------------------------------------------------------------
# File formats


def _fmt(x) -> str:
    # np.float64 subclasses float; cast so repr stays the plain decimal form
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def write_profile_file(path: str | Path, profile: Profile) -> None:
    """CSV columns k,t,u,a,v,d; SI units; k counts from 1."""
    lines = ["k,t,u,a,v,d"]
    ts = profile.grid.ts
    for i in range(profile.grid.n):
        lines.append(
            f"{i + 1},{_fmt((i + 1) * ts)},{_fmt(profile.u[i])},"
            f"{_fmt(profile.a[i])},{_fmt(profile.v[i])},{_fmt(profile.d[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _read_csv(path: str | Path, header: str) -> list[list[str]]:
    origin = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(origin, None, f"cannot read file: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ParseError(origin, None, "empty file")
    if lines[0].strip() != header:
        raise ParseError(origin, 1, f"expected header {header!r}, got {lines[0]!r}")
    width = header.count(",") + 1
    rows = []
    for lineno, raw in enumerate(lines[1:], 2):
        if not raw.strip():
            raise ParseError(origin, lineno, "blank line inside data")
        parts = raw.split(",")
        if len(parts) != width:
            raise ParseError(
                origin, lineno, f"expected {width} columns, got {len(parts)}"
            )
        rows.append(parts)
    if not rows:
        raise ParseError(origin, None, "no data rows")
    return rows


def _parse_floats(rows: list[list[str]], origin: str, skip_first: bool = False):
    out = []
    for offset, parts in enumerate(rows):
        vals = []
        for col, cell in enumerate(parts):
            if skip_first and col == 0:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(
                    origin, offset + 2, f"column {col + 1}: not a number: {cell!r}"
                ) from None
        out.append(vals)
    return np.array(out, dtype=float)


def read_profile_file(path: str | Path) -> Profile:
    """Read a profile CSV back into a Profile on its reconstructed grid."""
    origin = str(path)
    rows = _read_csv(path, "k,t,u,a,v,d")
    for offset, parts in enumerate(rows):
        try:
            k = int(parts[0])
        except ValueError:
            raise ParseError(origin, offset + 2, f"k must be an integer, got {parts[0]!r}") from None
        if k != offset + 1:
            raise ParseError(origin, offset + 2, f"k must count from 1 without gaps, got {k}")
    data = _parse_floats(rows, origin, skip_first=True)
    # contiguous copies: column views pick different BLAS kernels downstream
    t, u, a, v, d = (np.ascontiguousarray(col) for col in data.T)
    ts = t[0]
    if ts <= 0 or not np.allclose(t, ts * np.arange(1, t.size + 1), rtol=0, atol=1e-9 * max(1.0, abs(t[-1]))):
        raise ParseError(origin, None, "t column is not a uniform grid starting at ts")
    grid = SamplingGrid(ts=float(ts), n=t.size)
    v0 = float(v[0] - ts * a[0])
    return Profile(grid=grid, v0=v0, u=u, a=a, v=v, d=d)


def write_drive_log(path: str | Path, log: DriveLog) -> None:
    """CSV columns t,a_meas,f_res; units s, m/s^2, N."""
    lines = ["t,a_meas,f_res"]
    for i in range(log.t.size):
        lines.append(f"{_fmt(log.t[i])},{_fmt(log.a_meas[i])},{_fmt(log.f_res[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_drive_log(path: str | Path) -> DriveLog:
    origin = str(path)
    rows = _read_csv(path, "t,a_meas,f_res")
    data = _parse_floats(rows, origin)
    try:
        return DriveLog(
            t=np.ascontiguousarray(data[:, 0]),
            a_meas=np.ascontiguousarray(data[:, 1]),
            f_res=np.ascontiguousarray(data[:, 2]),
        )
    except ValueError as exc:
        raise ParseError(origin, None, str(exc)) from exc


def write_report_file(path: str | Path, mapping: dict) -> None:
    """Flat key = value report; same syntax as config files."""
    lines = [f"{key} = {_fmt(value)}" for key, value in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_report_file(path: str | Path) -> dict:
    origin = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(origin, None, f"cannot read file: {exc}") from exc
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(origin, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in out:
            raise ParseError(origin, lineno, f"duplicate key {key!r}")
        for kind in (int, float):
            try:
                out[key] = kind(value)
                break
            except ValueError:
                continue
        else:
            out[key] = value
    return out


def write_lifted_file(path: str | Path, lifted: LiftedProblem) -> None:
    """Sparse triplet text for the lifted system.

    Format: a header line ``lifted dim D n N r_designed R``; then one
    section per vector (``cost``, ``quality``) and per inequality row
    (``row <label> rhs <rhs>``), each followed by its nonzeros as
    ``<0-based index> <value>`` lines.  Indices address z = [vech(U), u].
    """
    out = [
        f"lifted dim {lifted.dim} n {lifted.n} r_designed "
        + (_fmt(lifted.r_designed) if lifted.r_designed is not None else "none")
    ]

    def section(header: str, vec: np.ndarray):
        nz = np.nonzero(vec)[0]
        out.append(f"{header} nnz {nz.size}")
        for idx in nz:
            out.append(f"{idx} {_fmt(float(vec[idx]))}")

    section("cost", lifted.cost)
    section("quality", lifted.quality_weights)
    for row in lifted.rows:
        nz = np.nonzero(row.coeffs)[0]
        out.append(f"row {row.label} rhs {_fmt(row.rhs)} nnz {nz.size}")
        for idx in nz:
            out.append(f"{idx} {_fmt(float(row.coeffs[idx]))}")
    Path(path).write_text("\n".join(out) + "\n")
