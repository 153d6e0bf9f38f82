"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, file/format
problems exit 2, backend (service) problems exit 3.
"""


class DirspeechError(Exception):
    """Base class for all package-specific errors."""


class FormatError(DirspeechError):
    """A file or byte stream is not in a supported format."""


class ManifestError(DirspeechError):
    """A manifest line failed to parse or violated an invariant."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigError(DirspeechError):
    """A run configuration or prompt catalog is incomplete or inconsistent."""


class BackendError(DirspeechError):
    """An external separator or SLM service misbehaved (timeout, bad reply)."""
