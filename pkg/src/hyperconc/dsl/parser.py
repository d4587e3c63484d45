"""Line-oriented parser and canonical renderer for ``.hqc`` circuits.

One statement per line::

    path A1 A2 a1 a2
    param beta2 = 0.2
    source ghz A1 B1 alpha2=1-beta2 delta2=0.6
    elem pbs_hv A1 A2 -> a2 a1
    elem pockels B1 active_slots=1
    postselect one-photon a1 a2 label=parity
    measure a2 basis=diag slots=1
    herald o1 o2
    target a1 b1 A=0,2

Any statement except ``path`` and ``param`` may end in ``if <expr>``; it is
then skipped when the expression evaluates to zero.  ``~`` stands for an
unused element port.
"""

from __future__ import annotations

import re
from typing import Iterable

from ..elements import SIGNATURES, ElementKind
from . import expr as E
from .nodes import (
    CircuitDoc,
    CircuitSyntaxError,
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
)

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYVAL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)=(?!=)(.*)\Z", re.S)
NUMBERISH = re.compile(r"[0-9.]")
PLACEHOLDER = "~"
BASES = ("hv", "diag")
MODELS = ("threshold", "pnr")
POSTSELECT_MODES = ("one-photon", "slots", "vacuum")
SOURCE_KINDS = ("ghz",)
SOURCE_KEYS = ("alpha2", "beta2", "delta2", "eta2")
LIST_KEYS = {"active_slots"}
POL_KEYS = {"long_pol"}
RESERVED = set(E.FUNCTIONS) | set(E.CONSTANTS) | {"if", "else", "and", "or", "not", "all"}


class _Line:
    """Tokens of one source line with 1-based columns."""

    def __init__(self, lineno: int, text: str):
        self.lineno, self.text = lineno, text
        self.tokens: list[tuple[str, int]] = []
        self.code_end = len(text)
        depth, start = 0, None
        for i, ch in enumerate(text):
            if ch == "#":
                self.code_end = i
                break
            if ch.isspace() and depth == 0:
                if start is not None:
                    self.tokens.append((text[start:i], start + 1))
                    start = None
                continue
            if start is None:
                start = i
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth = max(0, depth - 1)
        if start is not None:
            self.tokens.append((text[start:self.code_end].rstrip(), start + 1))

    def span(self, col: int, length: int = 1) -> Span:
        return Span(self.lineno, max(1, col), max(1, length))

    def tok_span(self, tok: tuple[str, int]) -> Span:
        return self.span(tok[1], len(tok[0]))

    def rest_after(self, tok: tuple[str, int]) -> tuple[str, int]:
        start = tok[1] - 1 + len(tok[0])
        body = self.text[start:self.code_end]
        lead = len(body) - len(body.lstrip())
        return body.strip(), start + lead + 1


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.diags: list[Diagnostic] = []
        self.declared: set[str] = set()
        self.params: set[str] = set()

    def error(self, msg: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.ERROR, msg, span))

    # ---- helpers

    def expr(self, text: str, span: Span, what: str) -> str | None:
        try:
            return E.canonical(text)
        except E.ExprError as exc:
            if NUMBERISH.match(text) and not re.search(r"[A-Za-z_(]", text):
                self.error(f"malformed number {text!r} in {what}", span)
            else:
                self.error(f"{exc} in {what}", span)
            return None

    def expr_list(self, text: str, span: Span, what: str) -> tuple | None:
        items, depth, cur = [], 0, ""
        for ch in text:
            if ch == "," and depth == 0:
                items.append(cur)
                cur = ""
                continue
            depth += ch == "("
            depth -= ch == ")"
            cur += ch
        items.append(cur)
        if any(not i.strip() for i in items):
            self.error(f"empty item in list {text!r} for {what}", span)
            return None
        out = [self.expr(i, span, what) for i in items]
        return None if any(o is None for o in out) else tuple(out)

    def path(self, tok, line: _Line, allow_placeholder: bool = False) -> str | None:
        name = tok[0]
        if name == PLACEHOLDER and allow_placeholder:
            return name
        if not IDENT.match(name):
            self.error(f"invalid path name {name!r}", line.tok_span(tok))
            return None
        if name not in self.declared:
            self.error(f"undeclared path {name!r}", line.tok_span(tok))
            return None
        return name

    def paths(self, toks, line, allow_placeholder=False) -> tuple | None:
        out = [self.path(t, line, allow_placeholder) for t in toks]
        return None if any(o is None for o in out) else tuple(out)

    def split_guard(self, line: _Line, toks):
        for i, tok in enumerate(toks):
            if tok[0] == "if" and i > 0:
                body, col = line.rest_after(tok)
                if not body:
                    self.error("'if' needs a condition", line.tok_span(tok))
                    return toks[:i], None, False
                g = self.expr(body, line.span(col, len(body)), "guard")
                return toks[:i], g, g is not None
        return toks, None, True

    def split_options(self, line: _Line, toks):
        positional, options = [], []
        for tok in toks:
            m = KEYVAL.match(tok[0])
            if m:
                options.append((m.group(1), m.group(2), tok))
            elif options:
                self.error(f"positional argument {tok[0]!r} after key=value options",
                           line.tok_span(tok))
            else:
                positional.append(tok)
        keys = [k for k, _, _ in options]
        for k, _, tok in options:
            if keys.count(k) > 1:
                self.error(f"option {k!r} given more than once", line.tok_span(tok))
                break
        return positional, options

    # ---- statements

    def parse(self) -> CircuitDoc:
        stmts = []
        for lineno, raw in enumerate(self.text.splitlines(), start=1):
            line = _Line(lineno, raw)
            if not line.tokens:
                continue
            before = len(self.diags)
            head = line.tokens[0]
            handler = getattr(self, "stmt_" + head[0].replace("-", "_"), None)
            if handler is None:
                self.error(f"unknown statement {head[0]!r}", line.tok_span(head))
                continue
            stmt = handler(line)
            if stmt is not None and len(self.diags) == before:
                stmts.append(stmt)
        if self.diags:
            raise CircuitSyntaxError(self.diags, self.text)
        return CircuitDoc(tuple(stmts), self.text)

    def stmt_path(self, line: _Line):
        toks = line.tokens[1:]
        if not toks:
            self.error("'path' needs at least one name", line.tok_span(line.tokens[0]))
            return None
        names = []
        for tok in toks:
            if not IDENT.match(tok[0]) or tok[0] in RESERVED:
                self.error(f"invalid path name {tok[0]!r}", line.tok_span(tok))
            elif tok[0] in self.declared:
                self.error(f"path {tok[0]!r} declared twice", line.tok_span(tok))
            else:
                names.append(tok[0])
        self.declared.update(names)
        return PathDecl(tuple(names), line.span(1, len(line.text.rstrip())))

    def stmt_param(self, line: _Line):
        code = line.text[:line.code_end]
        head = line.tokens[0]
        span = self._span_all(line)
        m = re.match(r"\s*param\s+([^\s=]+)\s*(?:(=)(.*))?\Z", code, re.S)
        if m is None:
            self.error("expected 'param <name> [= <expr>]'", span)
            return None
        name = m.group(1)
        name_span = line.span(m.start(1) + 1, len(name))
        if not IDENT.match(name) or name in RESERVED:
            self.error(f"invalid parameter name {name!r}", name_span)
            return None
        if name in self.params:
            self.error(f"parameter {name!r} declared twice", name_span)
            return None
        self.params.add(name)
        if m.group(2) is None:
            return ParamDecl(name, None, span)
        body = m.group(3).strip()
        if not body:
            self.error(f"parameter {name!r} has an empty value", name_span)
            return None
        body_span = line.span(m.start(3) + 1 + (len(m.group(3)) - len(m.group(3).lstrip())), len(body))
        e = self.expr(body, body_span, f"parameter {name!r}")
        return None if e is None else ParamDecl(name, e, span)

    def _span_all(self, line: _Line) -> Span:
        col = line.tokens[0][1]
        return line.span(col, len(line.text[col - 1:line.code_end].rstrip()))

    def stmt_source(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        if not toks:
            self.error("'source' needs a kind", line.tok_span(line.tokens[0]))
            return None
        kind = toks[0]
        if kind[0] not in SOURCE_KINDS:
            self.error(f"unknown source kind {kind[0]!r} (known: {', '.join(SOURCE_KINDS)})",
                       line.tok_span(kind))
            return None
        pos, opts = self.split_options(line, toks[1:])
        if len(pos) < 2:
            self.error("a ghz source needs at least two paths", line.tok_span(kind))
            return None
        paths = self.paths(pos, line)
        options = []
        for k, v, tok in opts:
            if k not in SOURCE_KEYS:
                self.error(f"unknown source option {k!r} (known: {', '.join(SOURCE_KEYS)})",
                           line.tok_span(tok))
                continue
            e = self.expr(v, line.tok_span(tok), f"option {k!r}")
            if e is not None:
                options.append((k, e))
        if paths is None or not ok:
            return None
        return SourceStmt(kind[0], paths, tuple(options), guard, self._span_all(line))

    def stmt_elem(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        if not toks:
            self.error("'elem' needs an element kind", line.tok_span(line.tokens[0]))
            return None
        kind_tok = toks[0]
        try:
            kind = ElementKind(kind_tok[0])
        except ValueError:
            known = ", ".join(k.value for k in ElementKind)
            self.error(f"unknown element kind {kind_tok[0]!r} (known: {known})", line.tok_span(kind_tok))
            return None
        sig = SIGNATURES[kind]
        pos, opts = self.split_options(line, toks[1:])
        arrows = [i for i, t in enumerate(pos) if t[0] == "->"]
        if len(arrows) > 1:
            self.error("more than one '->'", line.tok_span(pos[arrows[1]]))
            return None
        ins = pos[:arrows[0]] if arrows else pos
        outs = pos[arrows[0] + 1:] if arrows else []
        want = f"{sig.n_in} input(s)" + (f" -> {sig.n_out} output(s)" if sig.n_out else ", in place")
        if len(ins) != sig.n_in or len(outs) != sig.n_out or (arrows and sig.n_out == 0):
            self.error(f"arity mismatch for {kind.value}: expected {want}, got {len(ins)} input(s)"
                       f" and {len(outs)} output(s)", line.tok_span(kind_tok))
            return None
        inputs = self.paths(ins, line, allow_placeholder=sig.n_out > 0)
        outputs = self.paths(outs, line, allow_placeholder=True)
        allowed = set(sig.required) | set(sig.optional)
        options = []
        for k, v, tok in opts:
            span = line.tok_span(tok)
            if k not in allowed:
                self.error(f"unknown option {k!r} for {kind.value}"
                           + (f" (known: {', '.join(sorted(allowed))})" if allowed else ""), span)
                continue
            if k in POL_KEYS:
                if v.upper() not in ("H", "V"):
                    self.error(f"{k} must be H or V, got {v!r}", span)
                    continue
                options.append((k, v.upper()))
            elif k in LIST_KEYS:
                items = self.expr_list(v, span, f"option {k!r}")
                if items is not None:
                    options.append((k, items))
            else:
                e = self.expr(v, span, f"option {k!r}")
                if e is not None:
                    options.append((k, e))
        given = {k for k, _ in options}
        missing = [k for k in sig.required if k not in given and k not in {o[0] for o in opts}]
        if missing:
            self.error(f"{kind.value} needs option(s) {', '.join(missing)}", line.tok_span(kind_tok))
            return None
        if inputs is None or outputs is None or not ok:
            return None
        return ElemStmt(kind.value, inputs, outputs, tuple(sorted(options)), guard, self._span_all(line))

    def stmt_measure(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        pos, opts = self.split_options(line, toks)
        if len(pos) != 1:
            self.error("'measure' takes exactly one path", line.tok_span(line.tokens[0]))
            return None
        path = self.path(pos[0], line)
        basis = slots = model = None
        have_slots = False
        for k, v, tok in opts:
            span = line.tok_span(tok)
            if k == "basis":
                if v.lower() not in BASES:
                    self.error(f"basis must be one of {', '.join(BASES)}, got {v!r}", span)
                else:
                    basis = v.lower()
            elif k == "slots":
                have_slots = True
                slots = None if v == "all" else self.expr_list(v, span, "slots")
                if v != "all" and slots is None:
                    return None
            elif k == "model":
                if v.lower() not in MODELS:
                    self.error(f"model must be one of {', '.join(MODELS)}, got {v!r}", span)
                else:
                    model = v.lower()
            else:
                self.error(f"unknown measure option {k!r}", span)
        if basis is None and not any(k == "basis" for k, _, _ in opts):
            self.error("'measure' needs basis=hv|diag", line.tok_span(line.tokens[0]))
        if not have_slots:
            self.error("'measure' needs slots=<list>|all", line.tok_span(line.tokens[0]))
        if path is None or basis is None or not have_slots or not ok:
            return None
        return MeasureStmt(path, basis, slots, model, guard, self._span_all(line))

    def stmt_postselect(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        if not toks or toks[0][0] not in POSTSELECT_MODES:
            where = line.tok_span(toks[0]) if toks else line.tok_span(line.tokens[0])
            self.error(f"postselect mode must be one of {', '.join(POSTSELECT_MODES)}", where)
            return None
        mode = toks[0][0]
        pos, opts = self.split_options(line, toks[1:])
        if not pos:
            self.error(f"'postselect {mode}' needs at least one path", line.tok_span(toks[0]))
            return None
        paths = self.paths(pos, line)
        keep = label = None
        for k, v, tok in opts:
            span = line.tok_span(tok)
            if k == "keep" and mode == "slots":
                keep = self.expr_list(v, span, "keep")
                if keep is None:
                    return None
            elif k == "label":
                if not re.fullmatch(r"[A-Za-z0-9_.-]+", v):
                    self.error(f"invalid label {v!r}", span)
                else:
                    label = v
            else:
                self.error(f"unknown option {k!r} for postselect {mode}", span)
        if mode == "slots" and keep is None and not any(k == "keep" for k, _, _ in opts):
            self.error("'postselect slots' needs keep=<list>", line.tok_span(toks[0]))
            return None
        if paths is None or not ok:
            return None
        return PostselectStmt(mode, paths, keep, label, guard, self._span_all(line))

    def stmt_herald(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        if not toks:
            self.error("'herald' needs at least one path", line.tok_span(line.tokens[0]))
            return None
        paths = self.paths(toks, line)
        if paths is None or not ok:
            return None
        return HeraldStmt(paths, guard, self._span_all(line))

    def stmt_target(self, line: _Line):
        toks, guard, ok = self.split_guard(line, line.tokens[1:])
        pos, opts = self.split_options(line, toks)
        if not pos:
            self.error("'target' needs at least one path", line.tok_span(line.tokens[0]))
            return None
        paths = self.paths(pos, line)
        slot_map = []
        for k, v, tok in opts:
            span = line.tok_span(tok)
            if paths is not None and k not in paths:
                self.error(f"slot map for {k!r}, which is not a target path", span)
                continue
            items = self.expr_list(v, span, f"slot map of {k!r}")
            if items is None:
                continue
            if len(items) != 2:
                self.error(f"slot map of {k!r} needs two slots (S,L), got {len(items)}", span)
                continue
            slot_map.append((k, items))
        if paths is None or not ok:
            return None
        return TargetStmt(paths, tuple(sorted(slot_map)), guard, self._span_all(line))


def parse(text: str) -> CircuitDoc:
    """Parse ``.hqc`` text; raises CircuitSyntaxError listing every bad line."""
    return _Parser(text).parse()


# ---------------------------------------------------------------- rendering

def _val(e: str) -> str:
    return f"({e})" if re.search(r"\s", e) else e


def _list(items: Iterable[str]) -> str:
    return ",".join(_val(i) for i in items)


def _guard(g: str | None) -> str:
    return f" if {g}" if g is not None else ""


def render_statement(s) -> str:
    if isinstance(s, PathDecl):
        return "path " + " ".join(s.names)
    if isinstance(s, ParamDecl):
        return f"param {s.name}" + (f" = {s.expr}" if s.expr is not None else "")
    if isinstance(s, SourceStmt):
        opts = "".join(f" {k}={_val(v)}" for k, v in s.options)
        return f"source {s.kind} {' '.join(s.paths)}{opts}{_guard(s.guard)}"
    if isinstance(s, ElemStmt):
        out = f"elem {s.kind} {' '.join(s.inputs)}"
        if s.outputs:
            out += " -> " + " ".join(s.outputs)
        for k, v in s.options:
            out += f" {k}={_list(v) if isinstance(v, tuple) else _val(v)}"
        return out + _guard(s.guard)
    if isinstance(s, MeasureStmt):
        slots = "all" if s.slots is None else _list(s.slots)
        model = f" model={s.model}" if s.model else ""
        return f"measure {s.path} basis={s.basis} slots={slots}{model}{_guard(s.guard)}"
    if isinstance(s, PostselectStmt):
        out = f"postselect {s.mode} {' '.join(s.paths)}"
        if s.keep is not None:
            out += f" keep={_list(s.keep)}"
        if s.label:
            out += f" label={s.label}"
        return out + _guard(s.guard)
    if isinstance(s, HeraldStmt):
        return f"herald {' '.join(s.paths)}{_guard(s.guard)}"
    if isinstance(s, TargetStmt):
        maps = "".join(f" {p}={_list(v)}" for p, v in s.slot_map)
        return f"target {' '.join(s.paths)}{maps}{_guard(s.guard)}"
    raise TypeError(f"not a statement: {s!r}")


def render(doc: CircuitDoc) -> str:
    """Canonical text: one statement per line, no comments."""
    return "".join(render_statement(s) + "\n" for s in doc.statements)
