"""Exception hierarchy shared by the library and the CLI."""


class UfofdmError(Exception):
    pass


class ParameterError(UfofdmError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(ParameterError):
    """A combination of otherwise valid parameters is contradictory."""


class SolverError(UfofdmError):
    """The LP solver did not reach an optimal point."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class FactorizationError(UfofdmError, ArithmeticError):
    pass


class SpectralNullError(UfofdmError, ArithmeticError):
    """Zero-forcing is undefined because |F H| vanishes at a used bin."""


class ExperimentError(UfofdmError):
    pass
