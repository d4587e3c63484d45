"""The concentration procedures, wired from elements, post-selection and detection."""

from __future__ import annotations

import csv
import json
import math
import os
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import elements as el
from .analysis import ClosedFormReport, closed_forms
from .fock import H, V, Polarization, StateParams, build_ghz, tensor
from .measurement import (
    Basis,
    DetectionSpec,
    MIXTURE_KINDS,
    DetectorModel,
    MixtureComponent,
    MixtureReport,
    Monitor,
    assemble_mixture,
)
from .pipeline import (
    SUCCESS_FIDELITY,
    Detect,
    Evolve,
    Herald,
    KeepOnePhoton,
    KeepSlots,
    KeepVacuum,
    OutcomeRecord,
    Pipeline,
    TargetFamily,
    classify_output,
)

__all__ = [
    "ProtocolId", "Spm", "ProtocolReport", "InvariantError", "PreconditionError",
    "run_scheme1", "run_scheme2", "run_protocol", "threshold_mixture", "classify_output",
    "scheme1_pipeline", "scheme2_pipeline", "party_names", "sweep", "special_grid",
    "SweepRow", "write_sweep_csv",
]

CLOSED_FORM_TOL = 1e-9
COMPLETENESS_TOL = 1e-10
MAX_PARTIES = 26


class ProtocolId(str, Enum):
    SCHEME1_SIMPLE = "scheme1-simple"
    SCHEME1_IMPROVED = "scheme1-improved"
    SCHEME2 = "scheme2"
    SCHEME1_GHZ = "scheme1-ghz"
    SCHEME2_GHZ = "scheme2-ghz"


class Spm(str, Enum):
    SIMPLE = "simple"
    IMPROVED = "improved"


class InvariantError(RuntimeError):
    """A runtime cross-check failed; the simulation cannot be trusted."""


class PreconditionError(ValueError):
    pass


def party_names(n: int) -> list[str]:
    if n < 2:
        raise ValueError(f"need at least two parties, got N={n}")
    if n > MAX_PARTIES:
        raise ValueError(f"at most {MAX_PARTIES} parties are supported, got N={n}")
    return list(string.ascii_uppercase[:n])


# ---------------------------------------------------------------- scheme 1

def _scheme1_paths(parties: Sequence[str]):
    """Second-photon paths measured by each party after the parity stage."""
    return {p: p.lower() + "2" for p in parties}


@lru_cache(maxsize=64)
def _scheme1_stages(n: int, spm: Spm, postselect: bool, model: DetectorModel):
    parties = party_names(n)
    prep = []
    for p in parties:
        prep += [el.pol_flip(f"{p}2"), el.tb_flip(f"{p}2")]
    a, b = parties[0], parties[1]
    parity = [
        # the PBS sends the even-parity pair to different ports
        el.pbs_hv(f"{a}1", f"{a}2", "a2", "a1"),
        el.pockels(f"{b}1", {1}),
        el.pockels(f"{b}2", {1}),
        el.pbs_hv(f"{b}1", f"{b}2", "b1", "b2"),
        el.pockels("b1", {1}),
    ]
    for p in parties[2:]:
        q = p.lower()
        parity += [el.propagate(f"{p}1", f"{q}1"), el.propagate(f"{p}2", f"{q}2")]
    stages = [Evolve(el.compose(prep + parity))]
    if postselect:
        stages.append(KeepOnePhoton(("a1", "a2", "b1", "b2"), "parity"))

    measured = _scheme1_paths(parties)
    monitors, sides, spm_elems = [], {}, []
    for p, path in measured.items():
        if spm is Spm.SIMPLE:
            spm_elems.append(el.plain_ui(path))
            monitors.append(Monitor(path, Basis.DIAG, frozenset({1})))
            sides[p] = (path,)
        else:
            up, down = path + "u", path + "d"
            spm_elems += [el.tb_converter(path, up, down), el.bs50(up, down, up, down)]
            monitors += [Monitor(up, Basis.DIAG, frozenset({1})),
                         Monitor(down, Basis.DIAG, frozenset({1}))]
            sides[p] = (up, down)
    stages.append(Evolve(el.compose(spm_elems)))
    stages.append(Detect(DetectionSpec(tuple(monitors), model)))
    kept = tuple(p.lower() + "1" for p in parties)
    return tuple(stages), kept, sides


def scheme1_pipeline(params: StateParams, spm: Spm | str = Spm.IMPROVED, n: int = 2,
                     model: DetectorModel | str = DetectorModel.NUMBER_RESOLVING,
                     postselect: bool = True) -> Pipeline:
    """Two copies on paths X1 / X2 (the second flipped), parity checks, then the SPM."""
    spm, model = Spm(spm), DetectorModel(model)
    parties = party_names(n)
    stages, kept, _ = _scheme1_stages(n, spm, postselect, model)
    return Pipeline(_tensor_copies(params, parties), stages, (TargetFamily(kept),))


def _tensor_copies(params: StateParams, parties: Sequence[str]):
    return tensor(build_ghz(params, [f"{p}1" for p in parties]),
                  build_ghz(params, [f"{p}2" for p in parties]))


def threshold_mixture(params: StateParams, spm: Spm | str = Spm.IMPROVED, n: int = 2,
                      model: DetectorModel | str = DetectorModel.THRESHOLD) -> MixtureReport:
    """Components accepted when the parity stage is judged by clicks alone.

    Scheme 1 runs without the exact-one-photon post-selection; Alice and Bob
    accept whenever each of their measurement devices fires.  With
    number-resolving detectors only the two-photon success part survives.
    """
    spm, model = Spm(spm), DetectorModel(model)
    parties = party_names(n)
    stages, kept, sides = _scheme1_stages(n, spm, False, model)
    res = Pipeline(_tensor_copies(params, parties), stages).run()
    judged = {p: sides[p] for p in parties[:2]}
    return assemble_mixture(res.outcomes, judged, ("a1", "b1"))


# ---------------------------------------------------------------- scheme 2

INTERFEROMETERS = ("routed", "passive")


def _unit(z: complex) -> complex:
    return z / abs(z) if abs(z) > 0 else 1.0


@lru_cache(maxsize=64)
def _scheme2_stages(n: int, actor: int, theta: float, t: float, r: float,
                    long_pols: tuple, interferometer: str):
    parties = party_names(n)
    if not 0 <= actor < n:
        raise ValueError(f"actor index {actor} outside 0..{n - 1}")
    X = parties[actor]
    x = X.lower()
    x1, x2, x3 = f"{x}1", f"{x}2", f"{x}3"
    stage1 = [
        el.pbs_hv(X, f"{X}~", x1, x2),
        el.waveplate(x1, theta),
        el.pbs_hv(x1, f"{x1}~", f"{x1}t", x3),
        el.pbs_hv(f"{x1}t", x2, X, f"{X}~"),
    ]
    stages = [Evolve(el.compose(stage1)), KeepVacuum((x3,), "polarization")]
    stage2 = [
        el.ubs(t, r, X, x1, x2),
        el.pockels(x1, {0}),
        el.pockels(x2, {1}),
        el.pbs_hv(x1, x2, x1, x2),
        el.pol_routed_delay(x1, long_pols[0]),
        el.pol_routed_delay(x2, long_pols[1]),
    ]
    lossy = ()
    if interferometer == "passive":
        lossy = (f"{x1}~", f"{x2}~")
        h = 1 / math.sqrt(2)
        stage2 += [el.ubs(h, h, x1, x1, lossy[0]), el.ubs(h, h, x2, x2, lossy[1])]
    stages.append(Evolve(el.compose(stage2)))
    if lossy:
        stages.append(KeepVacuum(lossy, "interferometer"))
    o1, o2 = f"{x}o1", f"{x}o2"
    stages += [
        KeepSlots((x1, x2), frozenset({0, 2}), "time"),
        Evolve(el.bs50(x1, x2, o1, o2)),
        Herald((o1, o2)),
    ]
    others = [p for p in parties if p != X]
    return tuple(stages), o1, o2, tuple(others), parties, X


def scheme2_pipeline(params: StateParams, n: int = 2, actor: int = 0,
                     long_pols: Sequence[str] = ("H", "V"),
                     interferometer: str = "routed") -> Pipeline:
    """Parameter splitting on one party's photon, then time-bin concentration."""
    a, b = abs(params.alpha), abs(params.beta)
    if a + 1e-12 < b:
        raise PreconditionError(
            f"scheme 2 requires |alpha| >= |beta| (got |alpha|^2={a * a:.6g}, |beta|^2={b * b:.6g}); "
            "swap the H/V labels of the input so that the larger weight sits on |H..H>")
    if interferometer not in INTERFEROMETERS:
        raise ValueError(f"interferometer must be one of {INTERFEROMETERS}")
    pols = tuple(Polarization(p) for p in long_pols)
    theta = math.acos(min(1.0, b / a))
    stages, o1, o2, others, parties, _ = _scheme2_stages(
        n, actor, theta, abs(params.delta), abs(params.eta), pols, interferometer)
    pol_phase = _unit(params.beta) / _unit(params.alpha) if b > 0 else 1.0
    time_phase = _unit(params.eta) / _unit(params.delta)
    targets = tuple(
        TargetFamily((o,) + others, {o: (0, 2)}, pol_phase, time_phase) for o in (o1, o2))
    return Pipeline(build_ghz(params, parties), stages, targets)


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class ProtocolReport:
    protocol: ProtocolId
    n: int
    params: StateParams
    detectors: DetectorModel
    success_probability: float
    expected: float | None
    records: tuple
    closed_form: ClosedFormReport
    stage_probabilities: tuple
    failure_breakdown: MixtureReport | None = None
    options: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def successful(self) -> list[OutcomeRecord]:
        return [r for r in self.records if r.success]

    def to_dict(self) -> dict:
        sq = self.params.squares
        phases = {k: math.atan2(v.imag, v.real) for k, v in
                  (("alpha", self.params.alpha), ("beta", self.params.beta),
                   ("delta", self.params.delta), ("eta", self.params.eta))}
        return {
            "protocol": self.protocol.value,
            "n": self.n,
            "params": {**sq, "phases": phases},
            "detectors": self.detectors.value,
            "options": dict(sorted(self.options.items())),
            "success_probability": self.success_probability,
            "expected_success": self.expected,
            "stage_probabilities": [{"stage": s, "probability": p}
                                    for s, p in self.stage_probabilities],
            "closed_form": self.closed_form.to_dict(),
            "failure_breakdown": (None if self.failure_breakdown is None
                                  else self.failure_breakdown.to_dict()),
            "outcomes": [r.to_dict() for r in self.records],
            "notes": list(self.notes),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(_rounded(self.to_dict()), indent=indent, sort_keys=True,
                          ensure_ascii=False)


def _rounded(obj):
    """Fixed float formatting for deterministic output."""
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        r = float(f"{obj:.12g}")
        return 0.0 if r == 0 else r
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def _check(report_success: float, expected: float | None, records: Iterable[OutcomeRecord],
           what: str) -> None:
    records = list(records)
    total = sum(r.conditional_probability for r in records)
    if records and abs(total - 1) > COMPLETENESS_TOL:
        raise InvariantError(f"{what}: outcome probabilities sum to {total!r}")
    for r in records:
        if r.success and r.fidelity < SUCCESS_FIDELITY:
            raise InvariantError(f"{what}: outcome {r.label} marked successful with fidelity {r.fidelity}")
    if expected is not None and abs(report_success - expected) > CLOSED_FORM_TOL:
        raise InvariantError(
            f"{what}: simulated success {report_success!r} differs from closed form {expected!r}")


def run_scheme1(params: StateParams, spm: Spm | str = Spm.IMPROVED, n: int = 2,
                detectors: DetectorModel | str = DetectorModel.NUMBER_RESOLVING,
                check: bool = True, mixture: bool = True) -> ProtocolReport:
    spm, detectors = Spm(spm), DetectorModel(detectors)
    res = scheme1_pipeline(params, spm, n, DetectorModel.NUMBER_RESOLVING).run()
    cf = closed_forms(params)
    # each party's simple device keeps a quarter of the improved one's yield
    expected = cf.p1 / 2 ** n if spm is Spm.SIMPLE else cf.p1
    stage = list(res.stage_probabilities)
    stage.append(("spm", res.conditional_success if res.records else 0.0))
    if check:
        _check(res.success_probability, expected, res.records, "scheme 1")
    breakdown = None
    if mixture and detectors is DetectorModel.THRESHOLD:
        breakdown = threshold_mixture(params, spm, n, detectors)
    elif mixture:
        # resolving detectors reject every branch except the post-selected one
        breakdown = MixtureReport((MixtureComponent(res.branch_probability, MIXTURE_KINDS[2], 2, 1),),
                                  detectors)
    if check and breakdown is not None:
        if abs(breakdown.f2 - cf.f2) > CLOSED_FORM_TOL:
            raise InvariantError(f"scheme 1 mixture: F2 {breakdown.f2!r} vs {cf.f2!r}")
    if n == 2:
        pid = ProtocolId.SCHEME1_SIMPLE if spm is Spm.SIMPLE else ProtocolId.SCHEME1_IMPROVED
    else:
        pid = ProtocolId.SCHEME1_GHZ
    notes = []
    if detectors is DetectorModel.THRESHOLD:
        notes.append("threshold detectors cannot reject the vacuum and one-photon branches; "
                     "see failure_breakdown")
    return ProtocolReport(pid, n, params, detectors, res.success_probability, expected,
                          res.records, cf, tuple(stage), breakdown,
                          {"spm": spm.value}, tuple(notes))


def run_scheme2(params: StateParams, n: int = 2, actor: int = 0,
                long_pols: Sequence[str] = ("H", "V"), interferometer: str = "routed",
                detectors: DetectorModel | str = DetectorModel.NUMBER_RESOLVING,
                check: bool = True) -> ProtocolReport:
    detectors = DetectorModel(detectors)
    long_pols = tuple(Polarization(p).value for p in long_pols)
    res = scheme2_pipeline(params, n, actor, long_pols, interferometer).run()
    cf = closed_forms(params)
    notes = []
    default = long_pols == (H.value, V.value)
    if interferometer == "passive":
        expected = cf.p2 / 2 if default else None
        notes.append("passive 50:50 interferometers lose half the amplitude in each arm; "
                     "success is half of 4|beta delta eta|^2")
    else:
        expected = cf.p2 if default else None
    if not default:
        notes.append(f"non-default interferometer arms {long_pols}; closed form not applicable")
    if check:
        _check(res.success_probability, expected, res.records, "scheme 2")
    pid = ProtocolId.SCHEME2 if n == 2 else ProtocolId.SCHEME2_GHZ
    return ProtocolReport(pid, n, params, detectors, res.success_probability, expected,
                          res.records, cf, res.stage_probabilities, None,
                          {"actor": party_names(n)[actor], "long_pols": list(long_pols),
                           "interferometer": interferometer}, tuple(notes))


def run_protocol(protocol: ProtocolId | str, params: StateParams, n: int = 2,
                 detectors: DetectorModel | str = DetectorModel.NUMBER_RESOLVING,
                 **kwargs) -> ProtocolReport:
    protocol = ProtocolId(protocol)
    if protocol in (ProtocolId.SCHEME1_SIMPLE, ProtocolId.SCHEME1_IMPROVED):
        spm = Spm.SIMPLE if protocol is ProtocolId.SCHEME1_SIMPLE else Spm.IMPROVED
        return run_scheme1(params, kwargs.pop("spm", spm), n, detectors, **kwargs)
    if protocol is ProtocolId.SCHEME1_GHZ:
        return run_scheme1(params, kwargs.pop("spm", Spm.IMPROVED), n, detectors, **kwargs)
    return run_scheme2(params, n, detectors=detectors, **kwargs)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRow:
    param: str
    beta2: float
    protocol: ProtocolId
    success_sim: float
    success_formula: float
    note: str = ""


def max_threads() -> int:
    raw = os.environ.get("HYPERCONC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"HYPERCONC_THREADS must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def special_grid(steps: int) -> np.ndarray:
    """Abscissae |beta|^2 for the special state |alpha|=|delta|, |beta|=|eta|."""
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    return np.linspace(0.0, 0.5, steps)


def _formula(protocol: ProtocolId, cf: ClosedFormReport, n: int) -> float:
    if protocol is ProtocolId.SCHEME1_SIMPLE:
        return cf.p1 / 2 ** n
    if protocol in (ProtocolId.SCHEME1_IMPROVED, ProtocolId.SCHEME1_GHZ):
        return cf.p1
    return cf.p2


def _sweep_point(protocol: ProtocolId, point, special: bool, n: int) -> SweepRow:
    if special:
        b2 = float(point)
        params = StateParams.from_squares(1 - b2, 1 - b2)
        label = f"beta2={b2:.12g}"
    else:
        a2, d2 = point
        params = StateParams.from_squares(float(a2), float(d2))
        b2 = 1 - float(a2)
        label = f"alpha2={float(a2):.12g};delta2={float(d2):.12g}"
    cf = closed_forms(params)
    formula = _formula(protocol, cf, n)
    try:
        rep = run_protocol(protocol, params, n, mixture=False) if protocol.value.startswith("scheme1") \
            else run_protocol(protocol, params, n)
    except PreconditionError:
        return SweepRow(label, b2, protocol, float("nan"), formula, "precondition |alpha|>=|beta| violated")
    return SweepRow(label, b2, protocol, rep.success_probability, formula)


def sweep(protocols: Iterable[ProtocolId | str], grid: Iterable, special: bool = True,
          n: int = 2, threads: int | None = None) -> list[SweepRow]:
    """Simulated vs closed-form success at every grid point.

    Rows come back ordered by protocol, then grid order, whatever order the
    worker threads finish in.
    """
    protocols = [ProtocolId(p) for p in protocols]
    grid = list(grid)
    jobs = [(p, g) for p in protocols for g in grid]
    workers = threads or max_threads()
    if workers <= 1:
        return [_sweep_point(p, g, special, n) for p, g in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _sweep_point(job[0], job[1], special, n), jobs))


LONG_HEADER = ("param", "beta2", "success_sim", "success_formula", "protocol")
WIDE_HEADER = ("beta2", "P1_sim", "P1_formula", "P2_sim", "P2_formula")


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.12g}"


def write_sweep_csv(rows: Sequence[SweepRow], fh: TextIO, layout: str = "long") -> None:
    w = csv.writer(fh, lineterminator="\n")
    if layout == "long":
        w.writerow(LONG_HEADER)
        for r in rows:
            w.writerow((r.param, _fmt(r.beta2), _fmt(r.success_sim), _fmt(r.success_formula),
                        r.protocol.value))
        return
    if layout != "wide":
        raise ValueError(f"unknown layout {layout!r}")
    by_beta: dict = {}
    for r in rows:
        by_beta.setdefault(r.beta2, {})[r.protocol] = r
    w.writerow(WIDE_HEADER)
    for b2 in sorted(by_beta):
        cols = [_fmt(b2)]
        for pid in (ProtocolId.SCHEME1_IMPROVED, ProtocolId.SCHEME2):
            r = by_beta[b2].get(pid)
            cols += ["", ""] if r is None else [_fmt(r.success_sim), _fmt(r.success_formula)]
        w.writerow(cols)
