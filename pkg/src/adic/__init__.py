"""First-order objective-function-free solver for nonlinear equality- and
bound-constrained problems, with benchmarking and audit tooling."""

from .catalog import CatalogEntry, catalog_build, catalog_list, mini_suite
from .diagnostics import AuditReport, audit
from .driver import RunResult, SolverConfig, StepRecord, solve
from .model import (
    GeneralProblem,
    NoisyGradientWrapper,
    Problem,
    add_slacks,
    project_to_box,
)

__all__ = [
    "AuditReport", "audit",
    "CatalogEntry", "catalog_build", "catalog_list", "mini_suite",
    "RunResult", "SolverConfig", "StepRecord", "solve",
    "GeneralProblem", "NoisyGradientWrapper", "Problem",
    "add_slacks", "project_to_box",
]

__version__ = "0.1.0"
