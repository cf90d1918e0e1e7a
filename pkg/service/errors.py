"""Exception hierarchy shared by all pipeline services."""


class PiSentryError(Exception):
    """Base class for expected pipeline failures.

    Args:
        message (str): Human readable description of the failure.

    """

    exit_code: int = 1

    def __init__(self, message: str) -> None:
        """Initialize the error with a message."""
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict[str, str | int]:
        """Return a machine-readable representation of the error."""
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }


class MissingInputError(PiSentryError):
    """An input artifact does not exist."""

    exit_code = 2


class SchemaVersionError(PiSentryError):
    """An artifact was written with an incompatible schema version."""

    exit_code = 3


class CorpusError(PiSentryError):
    """A traffic corpus could not be read."""


class RequestParseError(PiSentryError):
    """A raw HTTP request is missing its request line or Host header."""


class EmptyTableError(PiSentryError):
    """No records were available to build a pair table."""


class PairNotFoundError(PiSentryError):
    """The requested <app, key> pair is not in the table."""


class FeatureDomainError(PiSentryError):
    """A feature is not computable for the given input."""


class DatasetError(PiSentryError):
    """A labeled dataset is empty, single-class or otherwise unusable."""


class ModelError(PiSentryError):
    """A model cannot be applied to the given input."""


class ConfigError(PiSentryError):
    """A configuration value is invalid or infeasible."""


class ArtifactError(PiSentryError):
    """A stored artifact exists but cannot be decoded."""
