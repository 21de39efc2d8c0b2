"""Finite-model approximation of stochastic team decision problems.

A dynamic team is first reduced to one with independent Gaussian
observations. Quantizing observations and actions uniformly then leaves a
finite team, solved by person-by-person descent or by exhaustive search.
"""

__version__ = "0.1.0"

from .evaluator import (
    CostReport,
    ExtendedPolicy,
    affine_oracle_witsenhausen,
    eval_exact_radner,
    eval_exact_relay,
    eval_exact_witsenhausen,
    exact_cost,
    extend_policy,
    radner_oracle,
)
from .exceptions import (
    ConfigError,
    DensityOverflow,
    InvalidParameter,
    NonFiniteCost,
    NonFiniteValue,
    StepFailed,
    TeamQuantError,
    TooLarge,
    UnsupportedKernel,
    UnsupportedVariance,
)
from .estimator import QuantizedTeamSolver, UniformQuantizer
from .experiments import (
    DEFAULT_SCHEDULE,
    ExperimentConfig,
    RefinementSchedule,
    emit_report,
    load_config,
    parse_config,
    read_reports,
    run_schedule,
)
from .finite import (
    FiniteTeamModel,
    PolicyTable,
    build_finite,
    eval_finite_cost,
    quadrature_doubling_gap,
    uniform_model,
)
from .problems import RadnerParams, RelayParams, WitsenhausenParams, make_problem
from .quantizer import ActionGrid, Quantizer, make_action_grid, make_uniform_quantizer, quantize
from .solver import best_response, exhaustive_solve, multi_start_solve, pbp_solve
from .team import (
    STATE,
    CostTerm,
    ObservationKernel,
    TeamProblem,
    eval_cost_dynamic_mc,
    eval_cost_reduced_mc,
    static_reduce,
)

__all__ = [
    "__version__",
    "CostReport",
    "ExtendedPolicy",
    "affine_oracle_witsenhausen",
    "eval_exact_radner",
    "eval_exact_relay",
    "eval_exact_witsenhausen",
    "exact_cost",
    "extend_policy",
    "radner_oracle",
    "ConfigError",
    "DensityOverflow",
    "InvalidParameter",
    "NonFiniteCost",
    "NonFiniteValue",
    "StepFailed",
    "TeamQuantError",
    "TooLarge",
    "UnsupportedKernel",
    "UnsupportedVariance",
    "DEFAULT_SCHEDULE",
    "ExperimentConfig",
    "RefinementSchedule",
    "emit_report",
    "load_config",
    "parse_config",
    "read_reports",
    "run_schedule",
    "FiniteTeamModel",
    "PolicyTable",
    "build_finite",
    "eval_finite_cost",
    "quadrature_doubling_gap",
    "uniform_model",
    "STATE",
    "CostTerm",
    "ObservationKernel",
    "TeamProblem",
    "eval_cost_dynamic_mc",
    "eval_cost_reduced_mc",
    "static_reduce",
    "QuantizedTeamSolver",
    "UniformQuantizer",
    "RadnerParams",
    "RelayParams",
    "WitsenhausenParams",
    "make_problem",
    "ActionGrid",
    "Quantizer",
    "make_action_grid",
    "make_uniform_quantizer",
    "quantize",
    "best_response",
    "exhaustive_solve",
    "multi_start_solve",
    "pbp_solve",
]
