"""Numerical laboratory for a higher-order NLS equation with |u|u nonlinearity and damping."""

__version__ = "0.1.0"

from hnls._validation import ValidationError
from hnls.core import (
    DampingProfile,
    DampingSpec,
    EquationParams,
    Field,
    Grid,
    Trajectory,
    make_grid,
)
from hnls.kernel import green, phi
from hnls.linear import propagate
from hnls.nonlinearity import EvaluationMode, NonlinearConfig
from hnls.solver import Scheme, SolveConfig, solve
from hnls.weights import WeightSpec

__all__ = [
    "__version__",
    "ValidationError",
    "DampingProfile",
    "DampingSpec",
    "EquationParams",
    "Field",
    "Grid",
    "Trajectory",
    "make_grid",
    "green",
    "phi",
    "propagate",
    "EvaluationMode",
    "NonlinearConfig",
    "Scheme",
    "SolveConfig",
    "solve",
    "WeightSpec",
]
