"""
Truncem
Explicit truncated Euler-Maruyama scheme for stochastic functional
differential equations with super-linear coefficients, with a coupled
Monte Carlo harness for measuring strong convergence.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    CouplingError,
    DomainError,
    NumericalBlowUpError,
    TruncemError,
)
from .segment import (
    GridFunction,
    Segment,
    integrate_pointwise,
    segment_eval,
    segment_eval_many,
    segment_integral_power,
    segment_norm,
    shift_append,
)
from .model import (
    AssumptionConstants,
    SfdeModel,
    build_model,
    make_cubic_volatility_model,
    make_linear_delay_model,
    model_names,
)
from .assumptions import (
    SegmentPairSampler,
    ViolationReport,
    check_initial_holder,
    check_khasminskii_inequality,
    check_polynomial_growth,
)
from .truncation import TruncationPolicy, make_policy, pi_delta, radius
from .noise import BrownianGrid, coarsen, dump_grid, generate, load_grid
from .scheme import (
    SchemeState,
    SimulatedPath,
    init_state,
    simulate,
    step,
    terminal_segment,
    z_process_eval,
    z_process_window,
)
from .harness import (
    ConvergenceReport,
    ExperimentConfig,
    fit_loglog,
    moment_diagnostic,
    run_convergence,
    segment_error,
    step_gap_diagnostic,
    theoretical_order,
)

__all__ = [
    "AssumptionConstants",
    "BrownianGrid",
    "ConfigurationError",
    "ConvergenceReport",
    "CouplingError",
    "DomainError",
    "ExperimentConfig",
    "GridFunction",
    "NumericalBlowUpError",
    "SchemeState",
    "Segment",
    "SegmentPairSampler",
    "SfdeModel",
    "SimulatedPath",
    "TruncationPolicy",
    "TruncemError",
    "ViolationReport",
    "build_model",
    "check_initial_holder",
    "check_khasminskii_inequality",
    "check_polynomial_growth",
    "coarsen",
    "dump_grid",
    "fit_loglog",
    "generate",
    "init_state",
    "integrate_pointwise",
    "load_grid",
    "make_cubic_volatility_model",
    "make_linear_delay_model",
    "make_policy",
    "model_names",
    "moment_diagnostic",
    "pi_delta",
    "radius",
    "run_convergence",
    "segment_error",
    "segment_eval",
    "segment_eval_many",
    "segment_integral_power",
    "segment_norm",
    "shift_append",
    "simulate",
    "step",
    "step_gap_diagnostic",
    "terminal_segment",
    "theoretical_order",
    "z_process_eval",
    "z_process_window",
]
