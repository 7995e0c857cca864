"""Entropy-stable nodal discontinuous Galerkin schemes for nonconservative hyperbolic systems."""

from esdgsem.errors import (
    AdmissibilityError,
    ConfigurationError,
    ContractViolation,
    DomainError,
    ESDGSEMError,
    LimiterFailure,
)
from esdgsem.sbp import SbpOperator, build_sbp
from esdgsem.solver import DGSEMSolver, Mesh, RunConfig, RunResult, build_solver, run
from esdgsem.systems import make_system

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigurationError",
    "ContractViolation",
    "DGSEMSolver",
    "DomainError",
    "ESDGSEMError",
    "LimiterFailure",
    "Mesh",
    "RunConfig",
    "RunResult",
    "SbpOperator",
    "build_sbp",
    "build_solver",
    "make_system",
    "run",
]
