"""Exception types shared across the package.

Every error class carries an ``exit_code`` used by the CLI so that each
failure class maps to a distinct process exit status.
"""


class RleJoinError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class QuerySyntaxError(RleJoinError):
    exit_code = 2

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownVariableError(RleJoinError):
    exit_code = 2


class DuplicateAliasError(RleJoinError):
    exit_code = 2


class UnknownColumnError(RleJoinError):
    exit_code = 2


class MalformedCsvError(RleJoinError):
    """Raised for ragged rows, bad quoting, or structural CSV problems."""

    exit_code = 4

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class SummaryFormatError(RleJoinError):
    """A stored summary directory fails validation on load."""

    exit_code = 4


class DisconnectedGraphError(RleJoinError):
    exit_code = 5


class FrequencyOverflowError(RleJoinError):
    """A frequency product or sum exceeded the unsigned 64-bit range."""

    exit_code = 6


class InconsistentSummaryError(RleJoinError):
    """Per-group totals of a summary disagree, or expansion desynchronized."""

    exit_code = 7


class TooLargeForOracleError(RleJoinError):
    exit_code = 8
