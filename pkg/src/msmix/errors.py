"""Exception hierarchy. The CLI maps each family onto an exit code."""


class MsmixError(Exception):
    exit_code = 2


class ValidationError(MsmixError, ValueError):
    """Invalid input data or configuration."""

    exit_code = 1


class NumericalError(MsmixError, ArithmeticError):
    """A solver step could not be carried out."""

    exit_code = 2


class KernelEvaluationError(NumericalError):
    pass


class SingularKernelError(NumericalError):
    pass


class StabilityError(NumericalError):
    """Time step violates a stability bound; carries the largest admissible step."""

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SingularSystemError(NumericalError):
    pass


class OutputError(MsmixError, OSError):
    exit_code = 3
