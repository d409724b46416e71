"""Exception hierarchy shared by all optosync modules."""


class OptosyncError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(OptosyncError, ValueError):
    pass


class MissingParameter(ParameterError):
    def __init__(self, name, setup=None):
        self.name = name
        where = f" for setup {setup}" if setup is not None else ""
        super().__init__(f"missing parameter {name!r}{where}")


class NonPositiveRate(ParameterError):
    def __init__(self, name, value):
        self.name = name
        self.value = value
        super().__init__(f"parameter {name!r} must be positive, got {value!r}")


class NonPositiveInput(ParameterError):
    pass


class LayoutMismatch(OptosyncError, ValueError):
    pass


class NonFiniteState(OptosyncError, FloatingPointError):
    """Integration produced NaN/Inf. ``time`` is the first time the state was non-finite."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"non-finite state at t = {time!r} ns")


class EmptyTrajectory(OptosyncError, ValueError):
    pass


class DegenerateSeparation(OptosyncError, ArithmeticError):
    pass


class ConstantSignal(OptosyncError, ValueError):
    pass


class NonUniformSampling(OptosyncError, ValueError):
    pass


class EdgeIndex(OptosyncError, IndexError):
    pass


class UnknownChannel(OptosyncError, KeyError):
    pass


class GridMismatch(OptosyncError, ValueError):
    pass


class PhaseTooSmall(OptosyncError, ValueError):
    pass


class WindowTooShort(OptosyncError, ValueError):
    pass


class UnknownPreset(OptosyncError, KeyError):
    pass


class BadPath(OptosyncError, KeyError):
    pass


class ConfigError(OptosyncError, ValueError):
    """Malformed or invalid configuration document.

    ``field`` names the offending field when known; ``position`` is a
    (line, column) pair for syntax errors.
    """

    def __init__(self, message, field=None, position=None):
        self.field = field
        self.position = position
        super().__init__(message)


class ConfigSyntaxError(ConfigError):
    """The document is not well-formed; ``position`` is (line, column)."""


class ConfigValidationError(ConfigError):
    """The document parses but a field is missing or invalid; see ``field``."""


class IoError(OptosyncError, OSError):
    pass


class EmptySeries(OptosyncError, ValueError):
    pass


class StageError(OptosyncError):
    """Failure inside a scenario pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
