"""Exception types shared across the package."""


class ConfnullError(Exception):
    """Base class for all package errors."""


class DomainError(ConfnullError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ConfnullError, ValueError):
    """Evaluation point outside the support of a tabulated or restricted function."""


class OrderingError(ConfnullError, ValueError):
    """Time arguments in the wrong order (for example t < s)."""


class ResolutionError(ConfnullError, ValueError):
    """Sampling grid too coarse for the requested number of modes."""


class ShapeError(ConfnullError, ValueError):
    """Array shapes do not match the system or horizon."""


class SingularityError(ConfnullError, ArithmeticError):
    """A matrix or Gramian entry is numerically singular."""


class ConvergenceError(ConfnullError, RuntimeError):
    """Fixed-point iteration did not converge.

    ``report`` carries the partial solve report (residual history and the
    sufficiency-condition margin) for diagnosis.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(ConfnullError, ValueError):
    """Scenario configuration could not be parsed or validated.

    ``violations`` lists every problem found, each prefixed by its field path.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
