"""Exception hierarchy shared across the pipeline.

``UserError`` subclasses map to CLI exit code 1 and HTTP 4xx; anything that
escapes as a bare ``StrataError`` (or ``InternalError``) is an invariant
violation and maps to exit code 2 / HTTP 500.
"""


class StrataError(Exception):
    """Base class for every error raised by this package."""


class UserError(StrataError):
    """Bad input or a request the current project state cannot satisfy."""


class InternalError(StrataError):
    """An invariant the engine guarantees was found broken."""


class ParseError(UserError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class UnknownIdError(UserError):
    pass


class DependencyError(UserError):
    """A phase was requested before its upstream artifacts exist."""


class PendingDecisionsError(UserError):
    """An operation is blocked by unresolved decisions."""

    def __init__(self, message: str, pending: list[str]):
        self.pending = list(pending)
        super().__init__(f"{message}: {', '.join(pending)}")
