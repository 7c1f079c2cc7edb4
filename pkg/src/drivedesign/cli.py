"""Command line front end.

Exit codes are a stable contract: 0 success, 2 infeasible or unusable
data (with a printed certificate or reason), 3 parse or validation
error, 4 solver budget exhausted.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from drivedesign.estimator import DriveLog, designed_relative_error
from drivedesign.io import (
    PRESETS,
    ParseError,
    RunConfig,
    design_from_config,
    load_config,
    read_drive_log,
    read_profile_file,
    realize_profile,
    write_drive_log,
    write_lifted_file,
    write_profile_file,
    write_report_file,
)
from drivedesign.problems import lift_problem
from drivedesign.profiles import critical_vmax, d_star, d_time_formula, gap_analysis, periodic_profile
from drivedesign.simulate import monte_carlo, run_pipeline
from drivedesign.wiener import filtfilt_zero_phase, fit_empirical_bayes

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_BUDGET = 4


def _fmt(x) -> str:
    # np.float64 subclasses float; cast so repr stays the plain decimal form
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _emit(mapping: dict, output: str | None) -> None:
    """Print a flat report and optionally persist it."""
    for key, value in mapping.items():
        print(f"{key} = {_fmt(value)}")
    if output is not None:
        write_report_file(output, mapping)


def _require_output(args) -> Path:
    if args.output is None:
        raise ParseError("command line", None, f"{args.command} needs --output")
    return Path(args.output)


def cmd_design(cfg: RunConfig, args) -> int:
    out = _require_output(args)
    report = design_from_config(cfg, args.objective)
    summary = {
        "status": report.status,
        "objective": args.objective or cfg.objective,
        "objective_value": report.objective_value,
        "lower_bound": report.lower_bound,
        "upper_bound": report.upper_bound,
        "gap": report.gap,
        "nodes_explored": report.nodes_explored,
    }
    if report.note:
        summary["note"] = report.note
    if report.u_star is not None:
        profile = realize_profile(cfg, report.u_star)
        summary.update(
            n_samples=profile.grid.n,
            ts=profile.grid.ts,
            duration=profile.grid.n * profile.grid.ts,
            distance=float(profile.d[-1]),
            excitation=float(np.sum(profile.a**2)),
        )
        write_profile_file(out, profile)
    _emit(summary, str(out.with_suffix(".report")))
    if report.status == "budget_exhausted":
        return EXIT_BUDGET
    if report.status == "infeasible" or report.u_star is None:
        return EXIT_INFEASIBLE
    print(f"profile written to {out}")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig, args) -> int:
    log = read_drive_log(args.log)
    r_designed = cfg.target.r_designed if cfg.target is not None else None
    try:
        result = run_pipeline(
            log, use_wiener=args.wiener, use_offset=args.offset, r_designed=r_designed
        )
    except ValueError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    est = result.estimate
    report = {
        "m_hat": est.m_hat,
        "sigma_e2_hat": est.sigma_e2_hat,
        "m_variance": est.m_variance,
        "r_total": float(est.r_trace[-1]),
        "n_samples": int(log.t.size),
    }
    if est.delta_hat is not None:
        report["delta_hat"] = est.delta_hat
    cov = est.theta_cov
    for i in range(cov.shape[0]):
        for j in range(i, cov.shape[1]):
            report[f"cov_{i}{j}"] = float(cov[i, j])
    if cfg.target is not None:
        report["designed_band"] = designed_relative_error(cfg.target)
        if r_designed is not None:
            report["r_designed"] = r_designed
            if result.reach_index is not None:
                report["reach_index"] = result.reach_index
    if result.wiener is not None:
        report["wiener_beta"] = result.wiener.beta
        report["wiener_fit_status"] = result.wiener.fit_status
    _emit(report, args.output)
    return EXIT_OK


def cmd_filter(cfg: RunConfig, args) -> int:
    out = _require_output(args)
    log = read_drive_log(args.log)
    try:
        model = fit_empirical_bayes(log.a_meas)
    except ValueError as exc:
        print(f"noise model fit failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    a_f = filtfilt_zero_phase(log.a_meas, model.beta, model.c)
    write_drive_log(out, DriveLog(t=log.t, a_meas=a_f, f_res=log.f_res))
    _emit(
        {
            "xi": model.xi,
            "gamma_ratio": model.gamma_ratio,
            "sigma_a2": model.sigma_a2,
            "sigma_v2": model.sigma_v2,
            "beta": model.beta,
            "c": model.c,
            "fit_status": model.fit_status,
        },
        str(out.with_suffix(".report")),
    )
    print(f"filtered log written to {out}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    profile = read_profile_file(args.profile)
    cfg.require(sim="to synthesize logs (sim.* keys)", target="to score the band")
    try:
        rep = monte_carlo(profile, cfg.sim, cfg.target)
    except ValueError as exc:
        print(f"simulation rejected: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(
        {
            "trials": cfg.sim.trials,
            "fraction_in_band": rep.fraction,
            "binomial_se": rep.binomial_se,
            "band": rep.band,
            "m_hat_mean": float(np.mean(rep.m_hat)),
            "m_hat_std": float(np.std(rep.m_hat)),
            "mean_reach_time": rep.mean_reach_time,
            "mean_reach_distance": rep.mean_reach_distance,
            "sigma_e2_hat_mean": rep.sigma_e2_hat_mean,
        },
        args.output,
    )
    return EXIT_OK


def _gap_grid(spec: str | None, cfg: RunConfig) -> np.ndarray:
    if spec is not None:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ParseError("command line", None, f"--gap-grid wants LO:HI:COUNT, got {spec!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError("command line", None, f"--gap-grid wants numbers, got {spec!r}") from None
        return np.linspace(lo, hi, count)
    dv = cfg.bounds.v_max - cfg.bounds.v_min
    return np.linspace(0.1 * dv, dv, 10)


def cmd_analyze(cfg: RunConfig, args) -> int:
    cfg.require(bounds="to analyze the band", ts="to quantize phases",
                target="to supply r_designed")
    if cfg.target.r_designed is None:
        raise ParseError("config", None, "missing 'target.r_designed', required for analysis")
    b, ts, r = cfg.bounds, cfg.ts, cfg.target.r_designed
    spec, profile = periodic_profile(b, ts, r)
    head = {
        "n_plus": spec.n_plus,
        "n_minus": spec.n_minus,
        "m_periods": spec.m_periods,
        "total_n": spec.total_n,
        "excitation": float(np.sum(profile.a**2)),
        "v_max": b.v_max,
        "critical_v_max": critical_vmax(b.a_max, b.a_min, b.v_min),
        "d_time": d_time_formula(b, ts, r),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        head["d_star"] = d_star(b, ts, r)
        gaps = gap_analysis(b, ts, r, _gap_grid(args.gap_grid, cfg))
    head["delta_v_star"] = gaps.delta_v_star
    head["gap_strictly_increasing"] = int(gaps.strictly_increasing)
    for key, value in head.items():
        print(f"{key} = {_fmt(value)}")
    lines = ["delta_v,d_time,d_distance,delta_d"]
    for e in gaps:
        lines.append(f"{_fmt(e.delta_v)},{_fmt(e.d_time)},{_fmt(e.d_distance)},{_fmt(e.delta_d)}")
    if args.output is not None:
        Path(args.output).write_text("\n".join(lines) + "\n")
    else:
        for line in lines:
            print(line)
    return EXIT_OK


def cmd_export_lifted(cfg: RunConfig, args) -> int:
    out = _require_output(args)
    if cfg.n is None:
        raise ParseError("config", None, "missing 'grid.n', required to size the lifted system")
    objective = args.objective or cfg.objective or "max_accuracy"
    problem = cfg.design_problem(objective, cfg.n)
    lifted = lift_problem(problem)
    write_lifted_file(out, lifted)
    print(f"lifted system ({lifted.dim} variables, {len(lifted.rows)} rows) written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivedesign",
        description="Design, estimate, and analyze mass-identification drive profiles.",
    )
    parser.add_argument("--config", help="config file (flat key = value lines)")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named parameter preset")
    parser.add_argument("--seed", type=int, help="override solver and simulation seeds")
    parser.add_argument("--output", help="primary output path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design an excitation profile")
    p.add_argument("--objective", choices=("min_time", "min_distance", "max_accuracy"))
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("estimate", help="estimate mass from a drive log")
    p.add_argument("log", help="drive log CSV (t,a_meas,f_res)")
    p.add_argument("--wiener", action="store_true", help="denoise acceleration first")
    p.add_argument("--offset", action="store_true", help="co-estimate a constant force offset")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("filter", help="zero-phase denoise a drive log")
    p.add_argument("log", help="drive log CSV (t,a_meas,f_res)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("simulate", help="Monte Carlo the full pipeline on a profile")
    p.add_argument("--profile", required=True, help="profile CSV (k,t,u,a,v,d)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="closed-form profile geometry and distance gap")
    p.add_argument("--gap-grid", help="velocity-range grid as LO:HI:COUNT")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export-lifted", help="write the lifted system as sparse triplets")
    p.add_argument("--objective", choices=("min_time", "min_distance", "max_accuracy"))
    p.set_defaults(func=cmd_export_lifted)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["solver.seed"] = args.seed
        overrides["sim.seed"] = args.seed
    try:
        cfg = load_config(args.config, preset=args.preset, overrides=overrides)
        return args.func(cfg, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        # library-level rejection of a mathematically unusable request
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    raise SystemExit(main())
