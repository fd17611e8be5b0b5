"""Structured diagnostics shared by the parser, validator and behavior checks."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourceSpan:
    """A 1-based, inclusive region of a source file."""

    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.end_line, self.end_col) < (self.line, self.col):
            raise ValueError(f"span ends before it starts: {self!r}")

    def merge(self, other: SourceSpan) -> SourceSpan:
        return SourceSpan(self.file, self.line, self.col, other.end_line, other.end_col)


NO_SPAN = SourceSpan("<model>", 0, 0, 0, 0)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    span: SourceSpan = NO_SPAN

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def sort_key(self) -> tuple:
        return (self.span, 0 if self.is_error else 1, self.code, self.message)

    def format(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.col}: {self.severity} {self.code}: {self.message}"


def error(code: str, message: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(ERROR, code, message, span or NO_SPAN)


def warning(code: str, message: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(WARNING, code, message, span or NO_SPAN)


def sort_diagnostics(items) -> list[Diagnostic]:
    """Sort and de-duplicate, so the same input always reports identically."""
    return sorted(set(items), key=Diagnostic.sort_key)


def has_errors(items) -> bool:
    return any(d.is_error for d in items)


def format_diagnostics(items) -> str:
    return "".join(d.format() + "\n" for d in sort_diagnostics(items))


class TMError(Exception):
    """Base class for errors that carry a stable diagnostic code."""

    code = "E000"

    def __init__(self, message: str, code: str | None = None, span: SourceSpan | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.span = span or NO_SPAN

    def to_diagnostic(self) -> Diagnostic:
        return error(self.code, str(self), self.span)


class DiagnosticsError(TMError):
    """Raised by operations whose failure is a list of diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = sort_diagnostics(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(
            first.message if first else "failed",
            first.code if first else None,
            first.span if first else None,
        )
