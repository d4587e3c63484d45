"""Text format for custom optical circuits (``.hqc`` files)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..pipeline import PipelineResult
from .checks import bound_parameters, elaborate, validate
from .nodes import CircuitDoc, CircuitError, CircuitSyntaxError, Diagnostic, Severity, Span, errors
from .parser import parse, render

__all__ = [
    "parse", "render", "validate", "elaborate", "bound_parameters", "load", "fixture_path",
    "FIXTURES", "run_circuit", "CircuitReport", "CircuitDoc", "CircuitError",
    "CircuitSyntaxError", "Diagnostic", "Severity", "Span",
]

FIXTURES = ("scheme1_simple", "scheme1_improved", "scheme2", "scheme1_improved_ghz3",
            "scheme2_ghz3", "scheme1_toggle")


def fixture_path(name: str) -> Path:
    """Location of a shipped circuit by stem, e.g. ``scheme2``."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    return Path(str(resources.files("hyperconc") / "circuits" / f"{name}.hqc"))


def load(path: str | Path) -> CircuitDoc:
    return parse(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class CircuitReport:
    name: str
    params: dict
    result: PipelineResult
    warnings: tuple

    @property
    def success_probability(self) -> float:
        return self.result.success_probability

    def to_dict(self) -> dict:
        return {
            "circuit": self.name,
            "params": dict(sorted(self.params.items())),
            "success_probability": self.success_probability,
            "stage_probabilities": [{"stage": s, "probability": p}
                                    for s, p in self.result.stage_probabilities],
            "outcomes": [r.to_dict() for r in self.result.records],
            "warnings": [d.format() for d in self.warnings],
        }

    def to_json(self, indent: int | None = 2) -> str:
        from ..protocols import _rounded
        return json.dumps(_rounded(self.to_dict()), indent=indent, sort_keys=True, ensure_ascii=False)


def run_circuit(doc: CircuitDoc, bindings: Mapping[str, float] | None = None,
                name: str = "<circuit>") -> CircuitReport:
    """Validate, elaborate and execute ``doc``."""
    diags = validate(doc, bindings)
    if errors(diags):
        raise CircuitError(errors(diags), doc.source)
    pipeline = elaborate(doc, bindings)
    if pipeline.source is None:
        raise CircuitError([Diagnostic(Severity.ERROR, "circuit has no source statement",
                                       Span(1, 1))], doc.source)
    params = {k: v for k, v in bound_parameters(doc, bindings).items() if math.isfinite(v)}
    warnings = tuple(d for d in diags if d.severity is Severity.WARNING)
    return CircuitReport(name, params, pipeline.run(), warnings)
