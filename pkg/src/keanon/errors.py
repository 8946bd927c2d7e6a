"""Exception types shared across the package."""


class KeanonError(Exception):
    """Base class for all errors raised by this package."""


class SchemaMismatchError(KeanonError):
    """CSV header or row shape does not match the declared schema."""


class ParseError(KeanonError):
    """A cell could not be parsed as its declared type."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyDatasetError(KeanonError):
    """The data section of a file contained no records."""


class DomainError(KeanonError):
    """A value lies outside the domain an operation is defined on."""


class ConfigurationError(KeanonError):
    """Invalid or incomplete run configuration."""


class UnsupportedConfigurationError(ConfigurationError):
    """A configuration the current version deliberately refuses to run."""


class InfeasibleError(KeanonError):
    """No admissible solution exists for the requested parameters (e.g. k > n)."""


class StageError(KeanonError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
