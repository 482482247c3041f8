from __future__ import annotations


class SheetkitError(Exception):
    """Base class for every diagnostic the toolchain raises.

    Carries an optional source location so the CLI can print
    ``origin:line:col: message``.
    """

    def __init__(
        self,
        message: str,
        line: int | None = None,
        col: int | None = None,
        origin: str | None = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.origin = origin

    def located(self, origin: str) -> "SheetkitError":
        if self.origin is None:
            self.origin = origin
        return self

    def __str__(self) -> str:
        parts = [self.origin or "<input>"]
        if self.line is not None:
            parts.append(str(self.line))
            if self.col is not None:
                parts.append(str(self.col))
        return ":".join(parts) + ": " + self.message


class ParseError(SheetkitError):
    pass


class CompileError(SheetkitError):
    pass


class RunError(SheetkitError):
    """Raised when a run listing cannot be expanded back into cells."""


class NamingError(SheetkitError):
    pass


class DocsetError(SheetkitError):
    pass
