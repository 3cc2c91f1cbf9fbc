"""Exception types shared across the package."""


class AvguardError(Exception):
    """Base class for all package-specific errors."""


class DomainError(AvguardError, ValueError):
    """An input is outside the mathematical domain of an operation."""


class GenerationError(AvguardError):
    """Synthetic world generation could not satisfy a constraint."""


class InsufficientOverlapError(AvguardError):
    """Two maps/grids share no jointly-valid cells, so no comparison exists."""


class CalibrationError(AvguardError):
    """Threshold calibration received unusable samples."""


class ConfigError(AvguardError):
    """An experiment or identification configuration is invalid."""


class ParseError(AvguardError):
    """A serialized artifact is malformed.

    Carries the field path (dotted) and, when known, the byte offset of the
    problem inside the input.
    """

    def __init__(self, message: str, *, path: str = "", offset: int | None = None):
        loc = []
        if path:
            loc.append(f"at {path}")
        if offset is not None:
            loc.append(f"byte {offset}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)
        self.path = path
        self.offset = offset
