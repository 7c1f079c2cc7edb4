"""Drive-profile design for accurate vehicle mass estimation."""

from drivedesign.dynamics import (
    ActuatorModel,
    Profile,
    SamplingGrid,
    build_actuator_toeplitz,
    build_kinematic_matrices,
    integrate_kinematics,
    make_profile,
    profile_from_acceleration,
    simulate_response,
)
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
from drivedesign.io import (
    PRESETS,
    ParseError,
    RunConfig,
    design_from_config,
    load_config,
    read_drive_log,
    read_profile_file,
    read_report_file,
    realize_profile,
    write_drive_log,
    write_lifted_file,
    write_profile_file,
    write_report_file,
)
from drivedesign.problems import (
    Bounds,
    ConstraintSystem,
    DesignProblem,
    FeasibilityReport,
    LiftedProblem,
    PiecewiseBound,
    assemble_constraints,
    check_feasibility,
    lift_point,
    lift_problem,
    verify_rank_one,
)
from drivedesign.profiles import (
    GapAnalysis,
    GapReport,
    PeriodicProfileSpec,
    critical_vmax,
    d_star,
    d_time_formula,
    distance_optimal_profile,
    gap_analysis,
    periodic_profile,
)
from drivedesign.simulate import (
    CoverageReport,
    PipelineResult,
    SimConfig,
    monte_carlo,
    run_pipeline,
    synthesize_log,
)
from drivedesign.solver import (
    ProfileParam,
    SolveReport,
    build_switching_input,
    max_excitation,
    solve_fixed_horizon,
    solve_min_time,
    solve_profile_parameterized,
)
from drivedesign.wiener import (
    WienerModel,
    condensed_negloglik,
    filtfilt_zero_phase,
    fit_empirical_bayes,
    wiener_coefficients,
)

__all__ = [
    "ActuatorModel",
    "Bounds",
    "ConstraintSystem",
    "CoverageReport",
    "DesignProblem",
    "DriveLog",
    "FeasibilityReport",
    "GapAnalysis",
    "GapReport",
    "LiftedProblem",
    "MassEstimate",
    "PRESETS",
    "ParseError",
    "PeriodicProfileSpec",
    "PiecewiseBound",
    "PipelineResult",
    "Profile",
    "ProfileParam",
    "QualityTarget",
    "RunConfig",
    "SamplingGrid",
    "SimConfig",
    "SolveReport",
    "WienerModel",
    "assemble_constraints",
    "build_actuator_toeplitz",
    "build_kinematic_matrices",
    "build_switching_input",
    "check_feasibility",
    "chi2_percentile",
    "condensed_negloglik",
    "critical_vmax",
    "d_star",
    "d_time_formula",
    "design_from_config",
    "designed_relative_error",
    "distance_optimal_profile",
    "estimate_mass",
    "estimate_with_nuisance",
    "excitation_energy",
    "filtfilt_zero_phase",
    "fit_empirical_bayes",
    "gap_analysis",
    "integrate_kinematics",
    "lift_point",
    "lift_problem",
    "load_config",
    "make_profile",
    "max_excitation",
    "monte_carlo",
    "periodic_profile",
    "profile_from_acceleration",
    "r_designed_from_accuracy",
    "read_drive_log",
    "read_profile_file",
    "read_report_file",
    "realize_profile",
    "run_pipeline",
    "simulate_response",
    "solve_fixed_horizon",
    "solve_min_time",
    "solve_profile_parameterized",
    "synthesize_log",
    "verify_rank_one",
    "wiener_coefficients",
    "write_drive_log",
    "write_lifted_file",
    "write_profile_file",
    "write_report_file",
]
