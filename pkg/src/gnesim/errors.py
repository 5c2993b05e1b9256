"""Exception types shared across the package."""


class GnesimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GnesimError):
    """Invalid user-supplied configuration (bad graph, schedule, config file...)."""


class ValidationError(GnesimError):
    """A constructed object violates one of its required invariants."""


class GameDefinitionError(GnesimError):
    """A game produced non-finite or otherwise unusable values."""


class FeedbackStarvationError(ConfigurationError):
    """Some agent never receives any feedback within the horizon."""


class DivergenceError(GnesimError):
    """The learning run produced a non-finite value."""

    def __init__(self, round_index, message=None):
        self.round_index = round_index
        super().__init__(message or f"non-finite state at round {round_index}")


class EquilibriumSolveError(GnesimError):
    """The per-round equilibrium solver failed to converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class InfeasibleConstraintsError(EquilibriumSolveError):
    """The coupled constraint system appears to have no strictly feasible point."""
