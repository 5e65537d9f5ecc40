"""Exception types and diagnostics shared by every engine module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional


@dataclass(frozen=True)
class SourceSpan:
    """Location of a parsed construct: 1-based line/column plus character offsets."""

    line: int
    column: int
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None
    rule_id: Optional[str] = None

    def as_line(self) -> str:
        where = str(self.span) if self.span is not None else "-"
        return f"{self.code}\t{where}\t{self.message}"

    def as_dict(self) -> dict:
        return {
            "code": self.code,
            "span": str(self.span) if self.span is not None else None,
            "rule": self.rule_id,
            "message": self.message,
        }


class SoftChaseError(Exception):
    """Base class; every engine error carries a stable diagnostic code."""

    code = "E000"

    def __init__(self, message: str, span: Optional[SourceSpan] = None, code: str = None):
        super().__init__(message)
        self.message = message
        self.span = span
        if code is not None:
            self.code = code

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.code, self.message, self.span)


class ParseError(SoftChaseError):
    code = "P100"

    def __init__(self, message: str, span: Optional[SourceSpan] = None, code: str = None,
                 diagnostics: Optional[List[Diagnostic]] = None):
        super().__init__(message, span, code)
        self.diagnostics = diagnostics or [Diagnostic(self.code, message, span)]


class UnboundVariableError(SoftChaseError):
    code = "M100"


class AnalysisError(SoftChaseError):
    code = "A100"

    def __init__(self, message: str, span: Optional[SourceSpan] = None, code: str = None,
                 diagnostics: Optional[List[Diagnostic]] = None):
        super().__init__(message, span, code)
        self.diagnostics = diagnostics or [Diagnostic(self.code, message, span)]


class InapplicableUnifierError(SoftChaseError):
    code = "C100"


class NotUndoableError(SoftChaseError):
    code = "C101"


class StepBudgetExceeded(SoftChaseError):
    code = "C102"


class GroundingBudgetExceeded(SoftChaseError):
    code = "N100"

    def __init__(self, message: str, nodes: int, edges: int):
        super().__init__(message)
        self.nodes = nodes
        self.edges = edges


class EmptySampleError(SoftChaseError):
    code = "Q100"


class ConfigError(SoftChaseError):
    code = "K100"
