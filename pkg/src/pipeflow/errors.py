"""Exception hierarchy shared by all pipeflow modules."""


class PipeflowError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(PipeflowError, ValueError):
    """Invalid input or configuration (maps to CLI exit status 1)."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class RangeError(ValidationError):
    """Argument outside the range where an evaluator is validated."""


class UsageError(ValidationError):
    """Objects combined inconsistently (grid mismatch, wrong regime...)."""


class NumericalError(PipeflowError, ArithmeticError):
    """A computation failed to meet its accuracy contract (exit status 2)."""


class SolverError(NumericalError):
    """Linear solve failed or stayed inaccurate after refinement."""

    def __init__(self, message: str, condition: float = float("nan")):
        super().__init__(message)
        self.condition = condition


class ResolutionError(NumericalError):
    """Grid too coarse to resolve a feature of the solution."""


class ConvergenceError(NumericalError):
    """An iteration did not converge within its step budget."""


class DegeneracyError(NumericalError):
    """A coefficient system is numerically singular."""


class ContractionError(NumericalError):
    """Fixed-point iteration refused: the contraction condition fails."""

    def __init__(self, message: str, measured: float):
        super().__init__(message)
        self.measured = measured
