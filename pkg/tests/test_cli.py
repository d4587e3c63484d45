import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from hyperconc.cli import main
from hyperconc.dsl import fixture_path

SCHEMA = json.loads((resources.files("hyperconc") / "schemas" / "report.schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_improved(capsys):
    code, out, _ = run(capsys, "run", "--protocol", "scheme1-improved", "--alpha2", "0.8", "--delta2", "0.6")
    assert code == 0
    rep = json.loads(out)
    assert rep["success_probability"] == pytest.approx(0.1536, abs=1e-12)
    jsonschema.validate(rep, SCHEMA)


def test_run_symmetric_scheme2(capsys):
    code, out, _ = run(capsys, "run", "--protocol", "scheme2", "--alpha2", "0.5", "--delta2", "0.5")
    assert code == 0 and json.loads(out)["success_probability"] == pytest.approx(0.5)


def test_precondition_exit(capsys):
    code, _, err = run(capsys, "run", "--protocol", "scheme2", "--alpha2", "0.3", "--delta2", "0.6")
    assert code == 2 and "|alpha|" in err


@pytest.mark.parametrize("extra, needle", [
    (["--alpha2", "0.8", "--delta2", "0.6", "--beta2", "0.3"], "alpha2"),
    (["--alpha2", "1.4", "--delta2", "0.6"], ""),
    (["--alpha2", "0.8", "--delta2", "0.6", "--n", "1"], "--n"),
])
def test_invalid_input(capsys, extra, needle):
    code, _, err = run(capsys, "run", "--protocol", "scheme1-simple", *extra)
    assert code == 2 and needle in err


@pytest.mark.parametrize("fmt", ["json", "text", "csv"])
def test_run_is_deterministic(capsys, fmt):
    args = ("run", "--protocol", "scheme1-simple", "--alpha2", "0.7", "--delta2", "0.55",
            "--detectors", "threshold", "--format", fmt)
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_every_protocol_validates(capsys, tmp_path):
    for proto in ("scheme1-simple", "scheme1-improved", "scheme2"):
        for det in ("pnr", "threshold"):
            out = tmp_path / f"{proto}-{det}.json"
            code, _, _ = run(capsys, "run", "--protocol", proto, "--alpha2", "0.8", "--delta2", "0.6",
                             "--detectors", det, "--n", "3", "--out", str(out))
            assert code == 0
            jsonschema.validate(json.loads(out.read_text()), SCHEMA)


def test_sweep_special(capsys):
    code, out, _ = run(capsys, "sweep", "--special", "--steps", "51", "--layout", "wide")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 51
    last = rows[-1]
    assert float(last["beta2"]) == 0.5
    assert float(last["P1_sim"]) == pytest.approx(0.25) and float(last["P2_sim"]) == pytest.approx(0.5)
    at = next(r for r in rows if float(r["beta2"]) == pytest.approx(0.2))
    assert float(at["P1_sim"]) == pytest.approx(0.1024) and float(at["P2_sim"]) == pytest.approx(0.128)
    for r in rows[1:]:
        assert float(r["P2_sim"]) > float(r["P1_sim"])


def test_sweep_long_header(capsys):
    code, out, _ = run(capsys, "sweep", "--special", "--steps", "3")
    assert out.splitlines()[0] == "param,beta2,success_sim,success_formula,protocol"
    assert len(out.splitlines()) == 7


def test_sweep_errors(capsys):
    assert run(capsys, "sweep", "--special", "--steps", "1")[0] == 2
    assert run(capsys, "sweep")[0] == 2
    assert run(capsys, "sweep", "--alpha2-values", "0.2,x", "--delta2-values", "0.5")[0] == 2


def test_sweep_grid(capsys):
    code, out, _ = run(capsys, "sweep", "--protocols", "scheme2", "--alpha2-values", "0.3,0.8",
                       "--delta2-values", "0.6")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["success_sim"] == "" and float(rows[1]["success_sim"]) == pytest.approx(0.192)


def test_circuit_matches_run(capsys):
    code, out, _ = run(capsys, "circuit", "run", str(fixture_path("scheme2")))
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, SCHEMA)
    _, ref, _ = run(capsys, "run", "--protocol", "scheme2", "--alpha2", "0.8", "--delta2", "0.6")
    assert rep["success_probability"] == json.loads(ref)["success_probability"]


def test_circuit_binding(capsys):
    code, out, _ = run(capsys, "circuit", "run", str(fixture_path("scheme2")), "--bind", "beta2=0.3")
    rep = json.loads(out)
    assert code == 0 and rep["params"]["beta2"] == 0.3
    assert rep["success_probability"] == pytest.approx(4 * 0.3 * 0.6 * 0.4)
    assert run(capsys, "circuit", "run", str(fixture_path("scheme2")), "--bind", "beta2")[0] == 2


def test_circuit_syntax_error(capsys, tmp_path):
    bad = tmp_path / "bad.hqc"
    bad.write_text("path a o\nelem pbs_hv a -> o\n")
    code, _, err = run(capsys, "circuit", "run", str(bad))
    assert code == 3 and "bad.hqc:2:" in err and "^" in err
    assert run(capsys, "circuit", "check", str(bad))[0] == 3
    assert run(capsys, "circuit", "check", str(fixture_path("scheme1_simple")))[0] == 0
    assert run(capsys, "circuit", "run", str(tmp_path / "missing.hqc"))[0] == 2


def test_invariant_exit(capsys, monkeypatch):
    from hyperconc import protocols

    def boom(*a, **k):
        raise protocols.InvariantError("forced")

    monkeypatch.setattr("hyperconc.cli.run_protocol", boom)
    code, _, err = run(capsys, "run", "--protocol", "scheme2", "--alpha2", "0.8", "--delta2", "0.6")
    assert code == 4 and "forced" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hyperconc", "run", "--protocol", "scheme1-simple",
                          "--alpha2", "0.8", "--delta2", "0.6", "--format", "text"],
                         capture_output=True, text=True, check=True)
    assert "0.0384" in res.stdout
