"""Exception hierarchy shared across the package.

Every error raised by fairproxy derives from :class:`FairproxyError` so
callers can catch the whole family at once. The CLI maps ConfigError to
exit code 2 (usage/configuration) and everything else to exit code 1.
"""


class FairproxyError(Exception):
    """Base class for all fairproxy errors."""


class FormatError(FairproxyError):
    """A file does not conform to its declared on-disk layout."""


class DataError(FairproxyError):
    """Well-formed input carries values that violate a data contract."""


class DomainError(FairproxyError):
    """Operation arguments fall outside the mathematical domain."""


class ConfigError(FairproxyError):
    """Invalid configuration value or parameter combination."""


class TrainingError(FairproxyError):
    """Training diverged or reached an unrecoverable numeric state."""


class CalibrationError(FairproxyError):
    """Iterative calibration failed to reach the requested tolerance."""
