"""Rotationally symmetric p-harmonic maps into the sphere: ODE, phase planes, solutions."""

__version__ = "0.1.0"

from .critpoints import (
    CriticalPointReport,
    classify_nonhyperbolic,
    critical_points,
    infinity_angles,
    linearize_finite,
    linearize_infinity,
)
from .exceptions import (
    ConsistencyError,
    ConvergenceError,
    EventNotFoundError,
    HorizonExceededError,
    InsufficientDataError,
    InvalidInputError,
    PHMapError,
    SingularDenominatorError,
    StiffnessError,
)
from .integrate import EventSpec, IntegratorConfig, Trajectory, integrate, integrate_backward_from_saddle
from .model import Direction, LogState, Params, PlanarState, PoincareState, RadialPoint
from .solutions import (
    CanonicalSolution,
    HarmonicMapMinimizer,
    RadialProfile,
    alpha0,
    asymptotic_checks,
    canonical_global,
    classify_solution,
    minimizer,
    oscillation_analysis,
    variational_minimizer,
)

__all__ = [
    "CanonicalSolution", "ConsistencyError", "ConvergenceError", "CriticalPointReport", "Direction",
    "EventNotFoundError", "EventSpec", "HarmonicMapMinimizer", "HorizonExceededError",
    "InsufficientDataError", "IntegratorConfig", "InvalidInputError", "LogState", "PHMapError",
    "Params", "PlanarState", "PoincareState", "RadialPoint", "RadialProfile",
    "SingularDenominatorError", "StiffnessError", "Trajectory", "alpha0", "asymptotic_checks",
    "canonical_global", "classify_nonhyperbolic", "classify_solution", "critical_points",
    "infinity_angles", "integrate", "integrate_backward_from_saddle", "linearize_finite",
    "linearize_infinity", "minimizer", "oscillation_analysis", "variational_minimizer",
]
