"""Exception hierarchy shared by the library and the command line."""

from typing import Optional


class NvqError(Exception):
    """Base class for all NVQ errors."""

    exit_code = 1


class DomainError(NvqError, ValueError):
    """An input lies outside the domain of the operation."""


class DegenerateIntervalError(DomainError):
    """The normalization interval has zero width."""


class ConstraintError(NvqError, ValueError):
    """Nonlinearity parameters are outside their feasible set."""


class NoFitNeededError(NvqError):
    """The uniform family has no parameters to fit."""


class ConstantVectorError(NvqError):
    """A (sub)vector has identical entries and cannot be fitted."""


class FitError(NvqError):
    """The fit was aborted, e.g. on a non-finite objective value."""


class ConfigError(NvqError):
    """Invalid run configuration."""

    exit_code = 2


class _OffsetError(NvqError):
    exit_code = 4

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class VectorFileError(_OffsetError):
    """Malformed fvecs/ivecs file."""


class ContainerFormatError(_OffsetError):
    """Malformed NVQ1 container."""


IO_EXIT_CODE = 3


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(exc, NvqError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return IO_EXIT_CODE
    return 1
