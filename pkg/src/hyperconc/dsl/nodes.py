"""Syntax tree of ``.hqc`` circuit documents."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


@dataclass(frozen=True, order=True)
class Span:
    line: int  # 1-based
    col: int  # 1-based
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str
    span: Span

    def format(self, source: str | None = None, filename: str = "<circuit>") -> str:
        head = f"{filename}:{self.span}: {self.severity.value}: {self.message}"
        if source is None:
            return head
        lines = source.splitlines()
        if not 1 <= self.span.line <= len(lines):
            return head
        text = lines[self.span.line - 1]
        caret = " " * (self.span.col - 1) + "^" * max(1, self.span.length)
        return f"{head}\n    {text}\n    {caret}"


def errors(diags) -> list[Diagnostic]:
    return [d for d in diags if d.severity is Severity.ERROR]


class CircuitError(ValueError):
    """Parsing, validation or elaboration failed; ``diagnostics`` says where."""

    def __init__(self, diagnostics, source: str | None = None):
        self.diagnostics = list(diagnostics)
        self.source = source
        first = self.diagnostics[0].format() if self.diagnostics else "circuit error"
        super().__init__(first)

    def report(self, filename: str = "<circuit>") -> str:
        return "\n".join(d.format(self.source, filename) for d in self.diagnostics)


class CircuitSyntaxError(CircuitError):
    pass


# Every statement keeps its span out of equality so that documents compare
# structurally (parse(render(doc)) == doc).

@dataclass(frozen=True)
class PathDecl:
    names: tuple
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    expr: str | None  # None: must be bound at elaboration
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class SourceStmt:
    kind: str
    paths: tuple
    options: tuple = ()  # ((key, expr), ...)
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class ElemStmt:
    kind: str
    inputs: tuple
    outputs: tuple = ()
    options: tuple = ()
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class MeasureStmt:
    path: str
    basis: str
    slots: tuple | None  # None: all slots
    model: str | None = None
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class PostselectStmt:
    mode: str  # one-photon | slots | vacuum
    paths: tuple
    keep: tuple | None = None
    label: str | None = None
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class HeraldStmt:
    paths: tuple
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class TargetStmt:
    paths: tuple
    slot_map: tuple = ()  # ((path, (s_expr, l_expr)), ...)
    guard: str | None = None
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class CircuitDoc:
    statements: tuple
    source: str = field(default="", compare=False)

    @property
    def params(self) -> list[ParamDecl]:
        return [s for s in self.statements if isinstance(s, ParamDecl)]

    @property
    def declared_paths(self) -> list[str]:
        out = []
        for s in self.statements:
            if isinstance(s, PathDecl):
                out.extend(s.names)
        return out
