# src/errors.py


class PotentialError(Exception):
    """Base class for every error raised by the package. `code` is what the CLI prints."""

    code = "error"


class InvalidArgumentError(PotentialError, ValueError):
    code = "invalid-argument"


class ConfigError(InvalidArgumentError):
    code = "config-error"

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


class SolverFailureError(PotentialError):
    code = "solver-failure"

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class InfeasibleProblemError(PotentialError):
    code = "infeasible-problem"
