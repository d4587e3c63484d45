"""Validation and elaboration of parsed circuits into executable pipelines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

from ..elements import SIGNATURES, ElementKind, ElementSpec
from ..fock import PhotonicState, StateParams, build_ghz, tensor
from ..measurement import DetectionSpec, DetectorModel, Monitor
from ..pipeline import (
    Detect,
    Evolve,
    Herald,
    KeepOnePhoton,
    KeepSlots,
    KeepVacuum,
    Pipeline,
    TargetFamily,
)
from . import expr as E
from .nodes import (
    CircuitDoc,
    CircuitError,
    Diagnostic,
    ElemStmt,
    HeraldStmt,
    MeasureStmt,
    ParamDecl,
    PathDecl,
    PostselectStmt,
    Severity,
    SourceStmt,
    Span,
    TargetStmt,
    errors,
)
from .parser import PLACEHOLDER

COEFF_TOL = 1e-3  # hand-typed t, r are accepted to three decimals and renormalized
NORMALIZATION_TOL = 1e-9
NORMALIZATION_PAIRS = (("alpha2", "beta2"), ("delta2", "eta2"))
AMPLITUDE_PAIRS = (("alpha", "beta"), ("delta", "eta"))


@dataclass
class _Env:
    values: dict
    diags: list

    def err(self, msg: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.ERROR, msg, span))

    def warn(self, msg: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.WARNING, msg, span))

    def eval(self, text: str, span: Span, what: str) -> float | None:
        try:
            return E.evaluate(text, self.values)
        except E.ExprError as exc:
            self.err(f"{what}: {exc}", span)
            return None


def _evaluate_params(doc: CircuitDoc, bindings: Mapping[str, float], env: _Env) -> None:
    declared = {p.name for p in doc.params}
    first_span = doc.statements[0].span if doc.statements else Span(1, 1)
    for name in bindings:
        if name not in declared:
            env.err(f"binding for undeclared parameter {name!r}", first_span)
    for p in doc.params:
        if p.name in bindings:
            env.values[p.name] = float(bindings[p.name])
            continue
        if p.expr is None:
            env.err(f"unbound parameter {p.name!r} (supply a value with a binding)", p.span)
            continue
        later = E.names(p.expr) - set(env.values)
        if later:
            env.err(f"parameter {p.name!r} uses {', '.join(sorted(later))} before it is bound", p.span)
            continue
        v = env.eval(p.expr, p.span, f"parameter {p.name!r}")
        if v is not None:
            env.values[p.name] = v
    spans = {p.name: p.span for p in doc.params}
    for a, b in NORMALIZATION_PAIRS:
        if a in env.values and b in env.values:
            total = env.values[a] + env.values[b]
            if abs(total - 1) > NORMALIZATION_TOL:
                env.warn(f"{a} + {b} = {total:.12g}; the state coefficients must satisfy "
                         "the normalization condition", spans[b])
    for a, b in AMPLITUDE_PAIRS:
        if a in env.values and b in env.values:
            total = env.values[a] ** 2 + env.values[b] ** 2
            if abs(total - 1) > NORMALIZATION_TOL:
                env.warn(f"{a}^2 + {b}^2 = {total:.12g}; the state coefficients must satisfy "
                         "the normalization condition", spans[b])


def _active(stmt, env: _Env) -> bool:
    guard = getattr(stmt, "guard", None)
    if guard is None:
        return True
    v = env.eval(guard, stmt.span, "guard")
    return bool(v)


def _int_list(items, env: _Env, span: Span, what: str) -> list[int] | None:
    out = []
    for it in items:
        v = env.eval(it, span, what)
        if v is None:
            return None
        if abs(v - round(v)) > 1e-9 or v < 0:
            env.err(f"{what}: slot indices must be non-negative integers, got {v:.12g}", span)
            return None
        out.append(int(round(v)))
    return out


@dataclass(frozen=True)
class _Resolved:
    """Statements with guards applied and values evaluated."""

    sources: tuple
    stages: tuple  # mixture of ('elem', ElementSpec, stmt) / ('post', ...) / ('measure', ...)
    targets: tuple
    values: dict
    model: str | None = None


def _element_spec(stmt: ElemStmt, env: _Env, fresh) -> ElementSpec | None:
    kind = ElementKind(stmt.kind)
    sig = SIGNATURES[kind]
    params = {}
    ok = True
    for k, v in stmt.options:
        if k == "long_pol":
            params[k] = v
        elif k == "active_slots":
            slots = _int_list(v, env, stmt.span, f"{kind.value} {k}")
            ok &= slots is not None
            params[k] = frozenset(slots or ())
        else:
            val = env.eval(v, stmt.span, f"{kind.value} {k}")
            ok &= val is not None
            params[k] = val
    if not ok:
        return None
    if kind is ElementKind.UBS:
        t, r = params["t"], params["r"]
        if t < 0 or r < 0:
            env.err(f"ubs: t and r must be real non-negative, got t={t:.6g}, r={r:.6g}", stmt.span)
            return None
        norm = t * t + r * r
        if abs(norm - 1) > COEFF_TOL:
            env.err(f"ubs: t²+r²≠1 (t²+r² = {norm:.6g})", stmt.span)
            return None
        if abs(norm - 1) > 1e-12:
            s = math.sqrt(norm)
            params["t"], params["r"] = t / s, r / s
    if kind is ElementKind.WAVEPLATE:
        th = params["theta"]
        if not -1e-12 <= th <= math.pi / 2 + 1e-12:
            env.err(f"waveplate: theta must lie in [0, pi/2], got {th:.6g}", stmt.span)
            return None
    if "delta" in sig.optional:
        d = params.get("delta", sig.optional["delta"])
        if abs(d - round(d)) > 1e-9:
            env.err(f"{kind.value}: delta must be an integer number of slots, got {d:.6g}", stmt.span)
            return None
        d = int(round(d))
        lowest = 0 if kind is ElementKind.DELAY else 1
        if d < lowest:
            env.err(f"{kind.value}: delta must be >= {lowest} (no negative delays), got {d}", stmt.span)
            return None
        params["delta"] = d
    if kind is ElementKind.TB_FLIP:
        env.warn("tb_flip relabels the late bin as early (an active switch, not a passive "
                 "causal element)", stmt.span)
    inputs = tuple(fresh() if p == PLACEHOLDER else p for p in stmt.inputs)
    outputs = tuple(fresh() if p == PLACEHOLDER else p for p in stmt.outputs)
    return ElementSpec(kind, inputs, outputs, params)


def _resolve(doc: CircuitDoc, bindings: Mapping[str, float] | None) -> tuple[_Resolved | None, list]:
    env = _Env({}, [])
    _evaluate_params(doc, dict(bindings or {}), env)
    if errors(env.diags):
        return None, env.diags

    counter = itertools.count(1)

    def fresh() -> str:
        return f"~{next(counter)}"

    live: set[str] = set()
    consumed: set[str] = set()
    sources, stages, targets = [], [], []
    terminal = None
    measure_model = None
    for stmt in doc.statements:
        if isinstance(stmt, (PathDecl, ParamDecl)):
            continue
        if not _active(stmt, env):
            continue
        if terminal is not None and not isinstance(stmt, (MeasureStmt, TargetStmt)):
            env.err("statement after a measurement; detection must come last", stmt.span)
            continue
        if terminal == "herald" and isinstance(stmt, MeasureStmt):
            env.err("measurement after a herald", stmt.span)
            continue

        if isinstance(stmt, SourceStmt):
            busy = [p for p in stmt.paths if p in live or p in consumed]
            if busy:
                env.err(f"source on path(s) already in use: {', '.join(busy)}", stmt.span)
                continue
            vals = {}
            for k, v in stmt.options:
                x = env.eval(v, stmt.span, f"source {k}")
                if x is not None:
                    vals[k] = x
            a2 = vals.get("alpha2", env.values.get("alpha2"))
            d2 = vals.get("delta2", env.values.get("delta2"))
            if a2 is None or d2 is None:
                env.err("source needs alpha2 and delta2 (as options or declared parameters)", stmt.span)
                continue
            try:
                params = StateParams.from_squares(a2, d2, vals.get("beta2"), vals.get("eta2"))
            except ValueError as exc:
                env.err(f"source: {exc}", stmt.span)
                continue
            sources.append(build_ghz(params, stmt.paths))
            live.update(stmt.paths)

        elif isinstance(stmt, ElemStmt):
            for p in stmt.inputs:
                if p in consumed:
                    env.err(f"path {p!r} was consumed by an earlier element", stmt.span)
            spec = _element_spec(stmt, env, fresh)
            if spec is None:
                continue
            outs = [p for p in stmt.outputs if p != PLACEHOLDER]
            clash = [p for p in outs if p in live and p not in stmt.inputs]
            if clash:
                env.err(f"output path(s) {', '.join(clash)} already carry photons", stmt.span)
                continue
            if outs:
                ins = [p for p in stmt.inputs if p != PLACEHOLDER]
                for p in ins:
                    live.discard(p)
                    consumed.add(p)
                for p in outs:
                    live.add(p)
                    consumed.discard(p)
            stages.append(("elem", spec, stmt))

        elif isinstance(stmt, PostselectStmt):
            dead = [p for p in stmt.paths if p in consumed]
            if dead:
                env.err(f"post-selection on consumed path(s): {', '.join(dead)}", stmt.span)
                continue
            if stmt.mode == "one-photon":
                empty = [p for p in stmt.paths if p not in live]
                if empty:
                    env.err(f"one-photon post-selection on path(s) that carry no photons: "
                            f"{', '.join(empty)}", stmt.span)
                    continue
                stages.append(("post", KeepOnePhoton(stmt.paths, stmt.label or "one-photon"), stmt))
            elif stmt.mode == "slots":
                keep = _int_list(stmt.keep, env, stmt.span, "keep")
                if keep is None:
                    continue
                stages.append(("post", KeepSlots(stmt.paths, frozenset(keep),
                                                 stmt.label or "slot-window"), stmt))
            else:
                stages.append(("post", KeepVacuum(stmt.paths, stmt.label or "vacuum"), stmt))

        elif isinstance(stmt, MeasureStmt):
            if stmt.path not in live:
                env.err(f"measurement on path {stmt.path!r}, which carries no photons", stmt.span)
                continue
            window = None
            if stmt.slots is not None:
                slots = _int_list(stmt.slots, env, stmt.span, "slots")
                if slots is None:
                    continue
                window = frozenset(slots)
            model = stmt.model or "pnr"
            if measure_model is not None and model != measure_model:
                env.err("all measurements must use the same detector model", stmt.span)
                continue
            measure_model = model
            terminal = "measure"
            live.discard(stmt.path)
            consumed.add(stmt.path)
            stages.append(("measure", Monitor(stmt.path, stmt.basis, window), stmt))

        elif isinstance(stmt, HeraldStmt):
            empty = [p for p in stmt.paths if p not in live]
            if empty:
                env.err(f"herald on path(s) that carry no photons: {', '.join(empty)}", stmt.span)
                continue
            terminal = "herald"
            stages.append(("herald", Herald(stmt.paths), stmt))

        elif isinstance(stmt, TargetStmt):
            smap = {}
            for p, (s_expr, l_expr) in stmt.slot_map:
                sl = _int_list((s_expr, l_expr), env, stmt.span, f"target slots of {p!r}")
                if sl is None:
                    break
                if sl[0] == sl[1]:
                    env.err(f"target slot map of {p!r} is degenerate (S and L both {sl[0]})", stmt.span)
                    break
                smap[p] = tuple(sl)
            else:
                targets.append((TargetFamily(stmt.paths, smap), stmt))

    end_live = live
    for fam, stmt in targets:
        missing = [p for p in fam.paths if p not in end_live]
        if missing and terminal != "herald":
            env.warn(f"target path(s) {', '.join(missing)} carry no photons at the end", stmt.span)
    if errors(env.diags):
        return None, env.diags
    resolved = _Resolved(tuple(sources), tuple(stages), tuple(t for t, _ in targets),
                         dict(env.values), measure_model)
    return resolved, env.diags


def validate(doc: CircuitDoc, bindings: Mapping[str, float] | None = None) -> list[Diagnostic]:
    """All diagnostics for ``doc`` under ``bindings``; errors block elaboration."""
    resolved, diags = _resolve(doc, bindings)
    if resolved is not None:
        try:
            _build(resolved)
        except ValueError as exc:
            span = doc.statements[-1].span if doc.statements else Span(1, 1)
            diags.append(Diagnostic(Severity.ERROR, str(exc), span))
    return sorted(diags, key=lambda d: (d.span.line, d.span.col))


def _build(res: _Resolved) -> Pipeline:
    stages = []
    monitors = []
    for kind, obj, stmt in res.stages:
        if kind == "elem":
            try:
                stages.append(Evolve(obj.build()))
            except ValueError as exc:
                raise ValueError(f"line {stmt.span.line}: {exc}") from exc
        elif kind == "post":
            stages.append(obj)
        elif kind == "measure":
            monitors.append(obj)
        else:
            stages.append(obj)
    if monitors:
        model = DetectorModel(res.model or "pnr")
        stages.append(Detect(DetectionSpec(tuple(monitors), model)))
    source: PhotonicState | None = None
    for s in res.sources:
        source = s if source is None else tensor(source, s)
    return Pipeline(source, tuple(stages), res.targets).compiled()


def elaborate(doc: CircuitDoc, bindings: Mapping[str, float] | None = None) -> Pipeline:
    """Deterministic pipeline for ``doc``; raises CircuitError if validation fails."""
    resolved, diags = _resolve(doc, bindings)
    if resolved is None:
        raise CircuitError(errors(diags), doc.source)
    try:
        return _build(resolved)
    except ValueError as exc:
        span = doc.statements[-1].span if doc.statements else Span(1, 1)
        raise CircuitError([Diagnostic(Severity.ERROR, str(exc), span)], doc.source) from exc


def bound_parameters(doc: CircuitDoc, bindings: Mapping[str, float] | None = None) -> dict:
    env = _Env({}, [])
    _evaluate_params(doc, dict(bindings or {}), env)
    if errors(env.diags):
        raise CircuitError(errors(env.diags), doc.source)
    return dict(env.values)
