"""Exception hierarchy for the estimation laboratory."""


class DremLabError(Exception):
    """Base class for all dremlab errors."""


class SymmetryError(DremLabError):
    """Input matrix is not symmetric within tolerance."""


class NonFiniteError(DremLabError):
    """Input contains NaN or infinite entries."""


class DimensionError(DremLabError):
    """Operands have incompatible shapes."""


class OutOfRangeError(DremLabError):
    """Time argument falls outside the scenario horizon."""


class StabilityError(DremLabError):
    """Filter gain and step violate l * tau_s < 1."""


class TimeMismatchError(DremLabError):
    """Sample time does not match the filter state time."""


class InsufficientDataError(DremLabError):
    """Trace is too short for the requested analysis."""


class ConfigError(DremLabError):
    """Invalid run configuration, preset or scenario file."""


class UnknownCheckError(DremLabError):
    """Acceptance selection names a check or suite that does not exist."""


class TraceDataError(DremLabError):
    """Trace lacks the data a check needs."""


class TraceIOError(DremLabError):
    """Reading or writing a trace file failed."""
