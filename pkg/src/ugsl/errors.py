"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes (configuration -> 2, ingestion -> 3,
numeric/resource -> 4), so raising the right class matters.
"""


class UgslError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(UgslError):
    """Invalid configuration value, shape mismatch, or misuse of an API."""


class IngestionError(UgslError):
    """A dataset or graph file could not be read or failed validation."""


class NumericError(UgslError):
    """A numerical procedure failed (non-finite loss, non-convergence)."""


class ResourceError(UgslError):
    """An operation would exceed a configured resource budget."""
