"""Exception taxonomy shared by the estimators and the CLI."""


class DenoiseError(Exception):
    """Base class for all package errors."""


class InputError(DenoiseError, ValueError):
    """Malformed or inconsistent input (shapes, alphabets, files)."""


class ConditioningOnNullEvent(InputError):
    pass


class AlphabetTooLarge(InputError):
    pass


class NonBinaryAlphabet(InputError):
    pass


class OddK(InputError):
    pass


class EstimationError(DenoiseError):
    """The data do not determine the requested quantity."""

    def __init__(self, message: str, step: str | None = None):
        super().__init__(message if step is None else f"{step}: {message}")
        self.step = step


class DegenerateChannel(EstimationError):
    pass


class DegenerateSource(EstimationError):
    pass


class AllCopiesConstant(EstimationError):
    pass


class MaxRestartsExceeded(EstimationError):
    pass
