"""Derivative-free directional search: two-point-feedback stochastic convex optimization."""

__version__ = "0.1.0"

from .benchmarks import (
    ExperimentAbort,
    ExperimentConfig,
    ExperimentResult,
    GAMMA_PRESETS,
    NesterovProblem,
    as_noisy_problem,
    make_x0,
    nesterov_value,
    noisy_nesterov_oracle,
    run_experiment,
)
from .estimator import (
    GradientEstimate,
    SphereSampler,
    estimate_gradient,
    sample_sphere,
    sphere_moment_check,
)
from .oracle import (
    CleanValueProbe,
    NoisyProblem,
    OracleLedger,
    evaluate_pair,
    oracle_call_count,
)
from .prox import ProxSetup, bregman, grad_kappa_norm_sq, mirror_step, prox_value, rho
from .solvers import (
    ConvergenceTrace,
    SolverAbort,
    SolverParams,
    ardfds,
    plan_parameters,
    rdfds,
    rspgf_baseline,
)

__all__ = [
    "CleanValueProbe",
    "ConvergenceTrace",
    "ExperimentAbort",
    "ExperimentConfig",
    "ExperimentResult",
    "GAMMA_PRESETS",
    "GradientEstimate",
    "NesterovProblem",
    "NoisyProblem",
    "OracleLedger",
    "ProxSetup",
    "SolverAbort",
    "SolverParams",
    "SphereSampler",
    "ardfds",
    "as_noisy_problem",
    "bregman",
    "estimate_gradient",
    "evaluate_pair",
    "grad_kappa_norm_sq",
    "make_x0",
    "mirror_step",
    "nesterov_value",
    "noisy_nesterov_oracle",
    "oracle_call_count",
    "plan_parameters",
    "prox_value",
    "rdfds",
    "rho",
    "rspgf_baseline",
    "run_experiment",
    "sample_sphere",
    "sphere_moment_check",
]
