import math

import pytest
from hypothesis import given, strategies as st

from hyperconc.dsl import (
    FIXTURES,
    CircuitError,
    CircuitSyntaxError,
    Severity,
    elaborate,
    fixture_path,
    load,
    parse,
    render,
    run_circuit,
    validate,
)
from hyperconc.dsl.expr import ExprError, evaluate, names
from hyperconc.dsl.nodes import ElemStmt
from hyperconc.elements import identity
from hyperconc.fock import StateParams
from hyperconc.protocols import Spm, run_scheme1, run_scheme2


def errs(diags):
    return [d for d in diags if d.severity is Severity.ERROR]


class TestParse:
    def test_pbs_bindings(self):
        doc = parse("path a1 a2 o1 o2\nelem pbs_hv a1 a2 -> o1 o2\n")
        (stmt,) = [s for s in doc.statements if isinstance(s, ElemStmt)]
        assert stmt.inputs == ("a1", "a2") and stmt.outputs == ("o1", "o2")

    def test_ubs_validated(self):
        doc = parse("path a t r\nelem ubs a -> t r t=0.7746 r=0.6325\n")
        assert errs(validate(doc)) == []
        assert elaborate(doc).stages

    def test_arity_error_on_its_line(self):
        with pytest.raises(CircuitSyntaxError) as exc:
            parse("path a1 o1\n\nelem pbs_hv a1 -> o1\n")
        (d,) = exc.value.diagnostics
        assert d.span.line == 3 and "arity" in d.message

    @pytest.mark.parametrize("text, needle", [
        ("path a\nelem frobnicate a\n", "unknown element"),
        ("path a\nmeasure z basis=hv slots=all\n", "undeclared path"),
        ("path a\nelem delay a delta=1.2.3\n", "malformed"),
        ("path a\nsource ghz a alpha2=0.5\n", ""),
    ])
    def test_errors_carry_spans(self, text, needle):
        with pytest.raises(CircuitError) as exc:
            doc = parse(text)
            diags = errs(validate(doc))
            if diags:
                raise CircuitError(diags, text)
        lines = text.splitlines()
        for d in exc.value.diagnostics:
            assert needle in d.message
            assert 1 <= d.span.line <= len(lines)
            assert 1 <= d.span.col <= len(lines[d.span.line - 1])
        assert "^" in exc.value.report("x.hqc")

    def test_all_errors_reported_at_once(self):
        with pytest.raises(CircuitSyntaxError) as exc:
            parse("path a\nelem nope a\nmeasure q basis=hv slots=all\n")
        assert len(exc.value.diagnostics) == 2

    def test_comments_and_blank_lines(self):
        doc = parse("# header\n\npath a  # trailing\n")
        assert doc.declared_paths == ["a"]


class TestValidate:
    def test_ubs_norm(self):
        diags = validate(parse("path a t r\nelem ubs a -> t r t=0.9 r=0.9\n"))
        assert any("t²+r²≠1" in d.message for d in errs(diags))

    def test_liveness(self):
        text = "path a b c\nsource ghz a b alpha2=0.5 delta2=0.5\nelem propagate a -> b\n"
        assert any("already carry" in d.message for d in errs(validate(parse(text))))
        text = "path a b c\nsource ghz a b alpha2=0.5 delta2=0.5\nmeasure c basis=hv slots=all\n"
        assert errs(validate(parse(text)))

    def test_normalization_warning(self):
        diags = validate(parse("param alpha2 = 0.5\nparam beta2 = 0.6\n"))
        assert [d.severity for d in diags] == [Severity.WARNING]
        assert "normalization" in diags[0].message
        # an inconsistent source itself is an error
        text = "path a b\nsource ghz a b alpha2=0.5 delta2=0.5 beta2=0.6 eta2=0.5\n"
        assert errs(validate(parse(text)))

    def test_shipped_fixtures_clean(self):
        for name in FIXTURES:
            assert errs(validate(load(fixture_path(name)))) == [], name

    def test_unbound_parameter(self):
        doc = parse("param x\npath a\nelem waveplate a theta=x\n")
        with pytest.raises(CircuitError, match="unbound"):
            elaborate(doc)
        assert elaborate(doc, {"x": 0.3}).stages

    def test_binding_unknown_param(self):
        with pytest.raises(CircuitError):
            elaborate(parse("path a\n"), {"nope": 1})

    def test_waveplate_range(self):
        assert errs(validate(parse("path a\nelem waveplate a theta=4\n")))


class TestElaborate:
    def test_empty_is_identity(self):
        p = elaborate(parse(""))
        assert p.source is None and p.stages == ()
        assert p.transform().name == identity().name

    def test_deterministic(self):
        doc = load(fixture_path("scheme2"))
        assert elaborate(doc) == elaborate(doc)

    def test_toggle_gives_two_pipelines(self):
        doc = load(fixture_path("scheme1_toggle"))
        on, off = elaborate(doc, {"improved": 1}), elaborate(doc, {"improved": 0})
        assert on != off
        p = StateParams.from_squares(0.8, 0.6)
        assert run_circuit(doc, {"improved": 0}).success_probability == pytest.approx(
            run_scheme1(p, Spm.SIMPLE).success_probability, abs=1e-12)

    @pytest.mark.parametrize("name, ref", [
        ("scheme1_simple", lambda p: run_scheme1(p, Spm.SIMPLE)),
        ("scheme1_improved", lambda p: run_scheme1(p, Spm.IMPROVED)),
        ("scheme2", lambda p: run_scheme2(p)),
        ("scheme1_improved_ghz3", lambda p: run_scheme1(p, Spm.IMPROVED, n=3)),
        ("scheme2_ghz3", lambda p: run_scheme2(p, n=3)),
    ])
    @pytest.mark.parametrize("beta2, eta2", [(0.2, 0.4), (0.35, 0.15)])
    def test_fixture_matches_protocol(self, name, ref, beta2, eta2):
        doc = load(fixture_path(name))
        rep = run_circuit(doc, {"beta2": beta2, "eta2": eta2})
        want = ref(StateParams.from_squares(1 - beta2, 1 - eta2))
        assert rep.success_probability == pytest.approx(want.success_probability, abs=1e-12)
        assert [p for _, p in rep.result.stage_probabilities] == pytest.approx(
            [p for _, p in want.stage_probabilities][:len(rep.result.stage_probabilities)], abs=1e-12)

    def test_no_source(self):
        with pytest.raises(CircuitError, match="no source"):
            run_circuit(parse("path a\nelem pol_flip a\n"))


class TestRoundTrip:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_fixtures(self, name):
        doc = load(fixture_path(name))
        assert parse(render(doc)) == doc
        assert render(parse(render(doc))) == render(doc)


# random documents: declared paths, then element lines that only use them
PATHS = ["p%d" % i for i in range(6)]
path_name = st.sampled_from(PATHS)
number = st.floats(0, 1, allow_nan=False).map(lambda x: repr(round(x, 6)))


@st.composite
def element_line(draw):
    kind = draw(st.sampled_from(["pbs_hv", "bs50", "ubs", "waveplate", "pockels", "delay",
                                 "pol_routed_delay", "tb_converter", "propagate", "pol_flip"]))
    ps = draw(st.lists(path_name, min_size=4, max_size=4, unique=True))
    guard = draw(st.sampled_from(["", " if x > 0.5", " if not x"]))
    body = {
        "pbs_hv": f"{ps[0]} {ps[1]} -> {ps[2]} {ps[3]}",
        "bs50": f"{ps[0]} {ps[1]} -> {ps[2]} {ps[3]}",
        "ubs": f"{ps[0]} -> {ps[1]} {ps[2]} t=sqrt({draw(number)}) r=sqrt(1 - x)",
        "waveplate": f"{ps[0]} theta={draw(number)} * pi / 2".replace(" * ", "*").replace(" / ", "/"),
        "pockels": f"{ps[0]} active_slots={draw(st.sampled_from(['0', '1', '0,1']))}",
        "delay": f"{ps[0]} delta={draw(st.integers(0, 3))}",
        "pol_routed_delay": f"{ps[0]} long_pol={draw(st.sampled_from('HV'))}",
        "tb_converter": f"{ps[0]} -> {ps[1]} {ps[2]}",
        "propagate": f"{ps[0]} -> {ps[1]}",
        "pol_flip": ps[0],
    }[kind]
    return f"elem {kind} {body}{guard}"


@st.composite
def documents(draw):
    lines = ["param x = " + draw(number), "path " + " ".join(PATHS)]
    lines += draw(st.lists(element_line(), max_size=6))
    if draw(st.booleans()):
        lines.append(f"measure {draw(path_name)} basis={draw(st.sampled_from(['hv', 'diag']))} slots=all")
    return "\n".join(lines) + "\n"


@given(documents())
def test_round_trip_property(text):
    doc = parse(text)
    canon = render(doc)
    assert parse(canon) == doc
    assert render(parse(canon)) == canon


@given(documents())
def test_spans_inside_source(text):
    doc = parse(text)
    lines = text.splitlines()
    for d in validate(doc):
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.col <= max(1, len(lines[d.span.line - 1]))


class TestExpr:
    def test_evaluate(self):
        assert evaluate("acos(sqrt(b/a))", {"a": 0.8, "b": 0.2}) == pytest.approx(math.pi / 3)
        assert evaluate("1 if x > 0 else 2", {"x": 1}) == 1
        assert names("sqrt(a) + pi * b") == {"a", "b"}

    @pytest.mark.parametrize("text", ["__import__('os')", "a.b", "'s'", "sqrt(-1)", "1/0", "[1]"])
    def test_rejects(self, text):
        with pytest.raises(ExprError):
            evaluate(text, {"a": 1})
