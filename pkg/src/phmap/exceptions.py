"""Exception hierarchy shared by every module."""


class PHMapError(Exception):
    """Base class for all errors raised by phmap."""


class InvalidInputError(PHMapError, ValueError):
    """Arguments violate a documented precondition."""


class SingularDenominatorError(PHMapError, ArithmeticError):
    """The leading coefficient of the radial equation vanished.

    On a genuine non-constant solution this quantity stays positive, so
    hitting it means the numerics broke down. When raised from inside an
    integration, ``trajectory`` holds everything computed before the failure.
    """

    def __init__(self, message, value=None, trajectory=None):
        super().__init__(message)
        self.value = value
        self.trajectory = trajectory


class OutOfChartError(InvalidInputError):
    """A Poincare-disc coordinate with ``rho >= 1`` was supplied."""


class BranchBoundaryError(InvalidInputError):
    """An angle sits on a multiple of pi, where ``w = cot f`` is undefined."""


class TurningPointError(InvalidInputError):
    """``w' = 0``: the slope-ratio chart ``g = w / w'`` is not defined there."""


class StiffnessError(PHMapError, RuntimeError):
    """Step size underflowed during adaptive integration."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConsistencyError(PHMapError, RuntimeError):
    """Two independent routes to the same quantity disagree."""


class ConvergenceError(PHMapError, RuntimeError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class HorizonExceededError(PHMapError, RuntimeError):
    """An expected event did not occur within the integration horizon."""


class EventNotFoundError(PHMapError, RuntimeError):
    """A required crossing was not located along a trajectory."""


class InsufficientDataError(PHMapError, ValueError):
    """Too few features (e.g. critical radii) to build a report."""
