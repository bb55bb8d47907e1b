"""Diagnostics and error types shared by the parser and validator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Code(Enum):
    EMPTY_SELECTOR = "EMPTY_SELECTOR"
    BAD_REGEXP = "BAD_REGEXP"
    UNKNOWN_FUNC = "UNKNOWN_FUNC"
    MISSING_RANGE = "MISSING_RANGE"
    MISPLACED_RANGE = "MISPLACED_RANGE"
    MISSING_UNWRAP = "MISSING_UNWRAP"
    EMPTY_PIPELINE_RESULT_RISK = "EMPTY_PIPELINE_RESULT_RISK"
    VARIABLE_UNSUBSTITUTED = "VARIABLE_UNSUBSTITUTED"
    # Artifact additions: generic syntax failures and two semantic cases the
    # shared list above has no name for.
    SYNTAX = "SYNTAX"
    FORBIDDEN_UNWRAP = "FORBIDDEN_UNWRAP"
    BAD_TEMPLATE = "BAD_TEMPLATE"


@dataclass(frozen=True)
class Diagnostic:
    """A problem anchored to a character span of the query text."""

    code: Code
    span: tuple[int, int]
    message: str

    def __str__(self) -> str:
        return f"{self.code.value} at {self.span[0]}..{self.span[1]}: {self.message}"


class QueryError(Exception):
    """Base class for query failures; carries structured diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


class QuerySyntaxError(QueryError):
    """Raised by parse() — the text is not a query in the supported subset."""

    @property
    def diagnostic(self) -> Diagnostic:
        return self.diagnostics[0]


class QueryValidationError(QueryError):
    """Raised by execute() when validate() reports a non-executable query."""
