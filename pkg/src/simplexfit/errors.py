"""
Exception hierarchy for simplexfit.

Every error carries the process exit status the CLI reports for it.
"""

from typing import Optional


class SimplexFitError(Exception):
    """Base class for all simplexfit errors."""
    exit_status = 5


####################################
# Configuration (exit 2)
####################################

class ConfigError(SimplexFitError):
    """Invalid run document, formula, link or option."""
    exit_status = 2


class FormulaSyntaxError(ConfigError):
    """Raised when a formula cannot be parsed."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        pointer = f"\n  {text}\n  {' ' * position}^" if text else ""
        super().__init__(f"{message} at position {position}{pointer}")


class UnknownFunctionError(FormulaSyntaxError):
    """Function-call syntax used with a name other than sqrt, log or exp."""


class UnboundNameError(ConfigError):
    """A parameter or covariate referenced by a formula has no value."""


class PinnedValueMissingError(ConfigError):
    """Starting values need a pinned value the run document does not supply."""


####################################
# Data (exit 3)
####################################

class DataError(SimplexFitError):
    """Unreadable or invalid dataset."""
    exit_status = 3


####################################
# Convergence (exit 4)
####################################

class NotConvergedError(SimplexFitError):
    """Raised when an operation needs a converged fit and did not get one."""
    exit_status = 4


####################################
# Numerical failures (exit 5)
####################################

class NumericalError(SimplexFitError):
    exit_status = 5


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of a density, link or formula function."""


class InvalidStateError(NumericalError):
    """A model state could not be assembled at some observation."""

    def __init__(self, message: str, observation: Optional[int] = None, iteration: Optional[int] = None):
        self.observation = observation
        self.iteration = iteration
        where = []
        if observation is not None:
            where.append(f"observation {observation + 1}")
        if iteration is not None:
            where.append(f"iteration {iteration}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class SingularMatrixError(NumericalError):
    pass


class SingularDesignError(SingularMatrixError):
    """The linearised design used for starting values is singular."""


class SingularInformationError(SingularMatrixError):
    """Fisher or observed information cannot be inverted."""


class ReplicateFailureError(NumericalError):
    """Too many simulation replicates failed."""
