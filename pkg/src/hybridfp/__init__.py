"""Projected Picard chains for hybrid fixed-point problems ``x = A(x) * B(x)`` in C[0, rho]."""

from hybridfp.bench_examples import CASE_IDS, BenchCase, CaseReport, load_case, run_case
from hybridfp.errors import (
    HybridFPError,
    InvalidArgumentError,
    InvalidCertificateError,
    InvalidProblemError,
    SingularOperatorError,
    UnknownCaseError,
)
from hybridfp.hybrid_core import (
    ContractionCertificate,
    DFunction,
    FunctionExpr,
    check_certificate,
    memoization,
    picard_iterate,
    run_chain,
    sup_norm,
)
from hybridfp.integral_solver import HybridIntegralEq, solve_integral, step_T_int
from hybridfp.ivp_solver import NonlocalIVP, SolveReport, solve_ivp, step_T
from hybridfp.problem_file import ProblemFileError, load_problem, parse_problem
from hybridfp.schauder_basis import (
    Bilinear2D,
    DyadicNodeOrder,
    PiecewiseLinear1D,
    integrate_prefix,
    node_sequence,
    project_1d,
    project_2d,
)

__all__ = [
    "CASE_IDS", "BenchCase", "CaseReport", "load_case", "run_case",
    "HybridFPError", "InvalidArgumentError", "InvalidCertificateError", "InvalidProblemError",
    "SingularOperatorError", "UnknownCaseError",
    "ContractionCertificate", "DFunction", "FunctionExpr", "check_certificate", "memoization",
    "picard_iterate", "run_chain", "sup_norm",
    "HybridIntegralEq", "solve_integral", "step_T_int",
    "NonlocalIVP", "SolveReport", "solve_ivp", "step_T",
    "ProblemFileError", "load_problem", "parse_problem",
    "Bilinear2D", "DyadicNodeOrder", "PiecewiseLinear1D", "integrate_prefix", "node_sequence",
    "project_1d", "project_2d",
]
