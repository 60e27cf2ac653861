"""Exception hierarchy shared by every stage of the simulator."""


class ElmSyncError(Exception):
    """Base class for all errors raised by elmsync."""


class ConfigurationError(ElmSyncError, ValueError):
    """Invalid parameters or configuration keys."""


class DomainError(ElmSyncError, ValueError):
    """An argument lies outside the domain of an operation."""


class CalibrationError(ElmSyncError):
    """Back-off calibration could not reach its target."""


class TrainingError(ElmSyncError):
    """Output-weight training failed (non-finite hidden outputs, empty set)."""


class StateError(ElmSyncError, RuntimeError):
    """An object was used before it reached the required state."""


class FormatError(ElmSyncError):
    """A model file is malformed, truncated, or of an unknown version."""
