class ExtractorError(Exception):
    """Base for everything this package raises on purpose."""


class ConfigError(ExtractorError):
    """Bad job parameters or prompt set."""


class SetupError(ExtractorError):
    """Backend dependencies or weights are not available."""


class ImageError(ExtractorError):
    """An input image could not be decoded (strict mode)."""
