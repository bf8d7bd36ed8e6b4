"""Multistep quadrature for first-kind Volterra equations with noisy data."""

from .errors import (
    DomainError,
    MethodNotAdmitted,
    NotSchur,
    NumericalError,
    UnknownMethod,
    UnknownProblem,
    VolterraError,
)
from .harness import ExperimentSpec, TableRow, problem, run_apriori_sweep, run_balance_sweep
from .methods import MultistepMethod, builtin, classify_stability, reflected, verify_order
from .solver import NoisySamples, Problem, SolveResult, make_samples, solve, solve_recursive, solve_weightform
from .stepsize import apriori_h, balance, balancing_constants, build_ladder
from .weights import integrate_forward, running_weights, starting_weights

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ExperimentSpec",
    "MethodNotAdmitted",
    "MultistepMethod",
    "NoisySamples",
    "NotSchur",
    "NumericalError",
    "Problem",
    "SolveResult",
    "TableRow",
    "UnknownMethod",
    "UnknownProblem",
    "VolterraError",
    "apriori_h",
    "balance",
    "balancing_constants",
    "build_ladder",
    "builtin",
    "classify_stability",
    "integrate_forward",
    "make_samples",
    "problem",
    "reflected",
    "run_apriori_sweep",
    "run_balance_sweep",
    "running_weights",
    "solve",
    "solve_recursive",
    "solve_weightform",
    "starting_weights",
    "verify_order",
]
