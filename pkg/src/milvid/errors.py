"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration and validation problems
exit with 1, file format and I/O problems exit with 2.
"""


class MilvidError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MilvidError):
    """A configuration value is out of its legal range or inconsistent."""


class ValidationError(MilvidError):
    """Data violates an invariant (non-finite values, bad labels, ...)."""


class ShapeError(ValidationError):
    """Array shapes do not match the model or operation contract."""


class FormatError(MilvidError):
    """A file is not in the expected format (bad magic, bad version)."""


class CorruptionError(FormatError):
    """A file is structurally recognizable but damaged (size, checksum)."""


class TrainingAbort(MilvidError):
    """Training stopped because the objective or a gradient went non-finite."""
