"""Static-error reports shared by the elaborator and the type checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

KINDS = (
    "UnboundVar", "LabelFlavorMismatch", "RowMismatch", "TypeMismatch", "OccursCheck",
    "AnnotationArity", "MissingFwd", "NonExhaustiveCase", "UnknownLabel", "BothBindAndFwd",
)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    span: object = None
    expected: Optional[str] = None
    actual: Optional[str] = None
    note: str = ""

    def location(self) -> str:
        if self.span is None:
            return "<unknown>:0:0"
        return f"{self.span.file}:{self.span.line}:{self.span.col}"

    def format(self) -> str:
        msg = f"{self.location()}: {self.kind}:"
        if self.expected is not None or self.actual is not None:
            msg += f" expected {self.expected} but found {self.actual}"
            if self.note:
                msg += f" ({self.note})"
        else:
            msg += f" {self.note}"
        return msg

    def to_json(self) -> dict:
        sp = self.span
        return {
            "kind": self.kind,
            "span": None if sp is None else {
                "file": sp.file, "line": sp.line, "col": sp.col,
                "end_line": sp.end_line, "end_col": sp.end_col,
            },
            "expected": self.expected,
            "actual": self.actual,
            "note": self.note,
        }


class StaticError(Exception):
    """Raised when elaboration cannot continue; carries one diagnostic."""

    def __init__(self, diag: Diagnostic):
        super().__init__(diag.format())
        self.diagnostic = diag
