"""Exception hierarchy shared across the toolkit."""


class CloudCertError(Exception):
    """Base class for all toolkit errors."""


class EncodingError(CloudCertError):
    """A coordinate cannot be canonically encoded (non-finite or out of range)."""


class DimensionError(CloudCertError):
    """Points of incompatible dimension were mixed."""


class ConfigError(CloudCertError):
    """Invalid configuration value (e.g. m=0, eta<=0)."""


class EmptyInputError(CloudCertError):
    """An operation that requires a non-empty cloud received an empty one."""


class NoEvidenceError(CloudCertError):
    """Every sub-point cloud is empty; the vote is undefined."""


class TrainingError(CloudCertError):
    """Training data is unusable (e.g. a class with zero examples)."""


class ClassifierBackendError(CloudCertError):
    """An external classifier process failed, timed out, or broke protocol."""


class BudgetError(CloudCertError):
    """An attack budget is infeasible (e.g. deleting more points than exist)."""


class ScaleError(CloudCertError):
    """Exhaustive enumeration would exceed the supported state count."""


class ConstructionError(CloudCertError):
    """A tightness witness could not be constructed for this instance."""


class FormatError(CloudCertError):
    """A data file could not be parsed."""


class IoError(CloudCertError):
    """Filesystem read/write failure."""
