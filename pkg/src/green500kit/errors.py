"""Exception hierarchy. Every error the toolkit raises on bad input derives
from :class:`Green500Error`, so the CLI can map them to exit code 2."""


class Green500Error(ValueError):
    pass


class ParseError(Green500Error):
    """Input text does not parse in the declared format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(Green500Error):
    """Parsed input violates a data invariant (ordering, sign, duplicates)."""


class CoverageError(Green500Error):
    """Requested interval is not covered by the trace support."""


class DomainError(Green500Error):
    """Argument outside the mathematical domain of an operation."""
