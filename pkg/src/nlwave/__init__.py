"""Solvers for the one-dimensional nonlocal wave equation u_tt + phi(A_BC) u = b."""

from .basis import BoundaryCondition, CoefficientVector, eigenpair, project, synthesize
from .errors import ConfigError, DomainError, StabilityError
from .micromodulus import Micromodulus, kernel_from_spec, unit_box
from .spectral import OperatorForm, build_operator, solve_homogeneous

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "CoefficientVector",
    "ConfigError",
    "DomainError",
    "Micromodulus",
    "OperatorForm",
    "StabilityError",
    "build_operator",
    "eigenpair",
    "kernel_from_spec",
    "project",
    "solve_homogeneous",
    "synthesize",
    "unit_box",
]
