"""Difference equations on a cycle: SDP relaxations, walk rounding, crossing analysis."""

__version__ = "0.1.0"

from relq.brownian import (
    BarrierSequenceSpec,
    BridgeIncrementLaw,
    ConstantRow,
    MarginCheckResult,
    adaptive_simpson,
    bridge_increment_law,
    conditional_barrier_probability,
    constants_table,
    discretization_margin_check,
    exact_one_lower_bound,
    hitting_time_density,
    prob_at_least_one,
    prob_three_or_more,
    std_normal,
)
from relq.constellation import (
    Constellation,
    SdpSolutionP,
    canonical_constellation,
    gram_residual,
    lift_solution,
    target_gram,
)
from relq.harness import (
    ExperimentConfig,
    Report,
    conjecture_experiment,
    correlation_gap_closed_form,
    end_to_end_ratio,
    format_report_csv,
    format_report_json,
    mc_correlation_gap,
    mc_sign_change,
    parse_report_csv,
    report_gate_ok,
    reproduce_constants,
    write_report,
)
from relq.instance import (
    Assignment,
    EvalBreakdown,
    Instance,
    brute_force_optimum,
    circular_distance,
    evaluate,
    generate_instance,
    load_instance,
    parse_instance,
    save_instance,
    scale_instance,
)
from relq.rounding import (
    CrossingEvent,
    GaussianSampler,
    RoundingOutcome,
    WalkTrace,
    compute_walk,
    detect_extreme_sign_changes,
    lifted_walk_values,
    round_lifted_solution,
    round_solution,
)
from relq.sdp import (
    FeasibilityReport,
    SdpSolutionPPlus,
    SolverConfig,
    convert_to_p,
    feasibility_report,
    integral_embedding,
    load_solution,
    objective_p,
    objective_p_plus,
    save_solution,
    solve_p_plus,
)

__all__ = [
    "__version__",
    # instances
    "Assignment",
    "EvalBreakdown",
    "Instance",
    "brute_force_optimum",
    "circular_distance",
    "evaluate",
    "generate_instance",
    "load_instance",
    "parse_instance",
    "save_instance",
    "scale_instance",
    # constellation geometry
    "Constellation",
    "SdpSolutionP",
    "canonical_constellation",
    "gram_residual",
    "lift_solution",
    "target_gram",
    # relaxations
    "FeasibilityReport",
    "SdpSolutionPPlus",
    "SolverConfig",
    "convert_to_p",
    "feasibility_report",
    "integral_embedding",
    "load_solution",
    "objective_p",
    "objective_p_plus",
    "save_solution",
    "solve_p_plus",
    # rounding
    "CrossingEvent",
    "GaussianSampler",
    "RoundingOutcome",
    "WalkTrace",
    "compute_walk",
    "detect_extreme_sign_changes",
    "lifted_walk_values",
    "round_lifted_solution",
    "round_solution",
    # barrier-crossing analysis
    "BarrierSequenceSpec",
    "BridgeIncrementLaw",
    "ConstantRow",
    "MarginCheckResult",
    "adaptive_simpson",
    "bridge_increment_law",
    "conditional_barrier_probability",
    "constants_table",
    "discretization_margin_check",
    "exact_one_lower_bound",
    "hitting_time_density",
    "prob_at_least_one",
    "prob_three_or_more",
    "std_normal",
    # experiments
    "ExperimentConfig",
    "Report",
    "conjecture_experiment",
    "correlation_gap_closed_form",
    "end_to_end_ratio",
    "format_report_csv",
    "format_report_json",
    "mc_correlation_gap",
    "mc_sign_change",
    "parse_report_csv",
    "report_gate_ok",
    "reproduce_constants",
    "write_report",
]
