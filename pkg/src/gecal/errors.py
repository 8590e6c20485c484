"""Exception types shared across the toolkit."""


class GecalError(Exception):
    """Base class for all toolkit errors."""


class FormatError(GecalError):
    """A file or text input violates its format; carries the line number."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class OracleError(GecalError):
    """A GEC backend query failed (connection, timeout, server error)."""


class ProtocolError(OracleError):
    """The GEC backend violated the wire protocol (e.g. count mismatch)."""


class FingerprintMismatchError(GecalError):
    """A cache was opened against a different backend than it was built for."""
