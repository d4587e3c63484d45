"""Executable optical pipelines: evolve, post-select, then detect or herald."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .analysis import fidelity
from .elements import ModeTransform, compose
from .fock import PhotonicState, apply, target_state
from .measurement import (
    DetectionOutcome,
    DetectionSpec,
    enumerate_outcomes,
    herald_paths,
    postselect_one_photon_per_path,
    postselect_slot_window,
    postselect_vacuum,
)

SUCCESS_FIDELITY = 1 - 1e-10
SIGN_NAMES = {1: "+", -1: "-"}


@dataclass(frozen=True)
class Evolve:
    transform: ModeTransform


@dataclass(frozen=True)
class KeepOnePhoton:
    paths: tuple
    label: str = "one-photon"


@dataclass(frozen=True)
class KeepSlots:
    paths: tuple
    slots: frozenset
    label: str = "slot-window"


@dataclass(frozen=True)
class KeepVacuum:
    paths: tuple
    label: str = "vacuum"


@dataclass(frozen=True)
class Detect:
    spec: DetectionSpec


@dataclass(frozen=True)
class Herald:
    paths: tuple


@dataclass(frozen=True)
class TargetFamily:
    """The four maximally hyperentangled states on ``paths``.

    ``pol_phase``/``time_phase`` rotate the relative phases of the whole
    family (for complex input parameters); slots come from ``slot_map``.
    """

    paths: tuple
    slot_map: Mapping = field(default_factory=dict)
    pol_phase: complex = 1
    time_phase: complex = 1

    def candidates(self) -> list[tuple[str, PhotonicState]]:
        out = []
        for sp in (1, -1):
            for st in (1, -1):
                tid = f"psi{SIGN_NAMES[sp]}{SIGN_NAMES[st]}"
                out.append((tid, target_state(sp * self.pol_phase, st * self.time_phase,
                                              self.paths, self.slot_map)))
        return out


def classify_output(state: PhotonicState, candidates: Sequence[tuple[str, PhotonicState]]
                    ) -> tuple[str, float]:
    """Target with fidelity 1 if one exists, otherwise the best match."""
    if not candidates:
        raise ValueError("no candidate targets")
    scored = [(tid, fidelity(state, t)) for tid, t in candidates]
    exact = [s for s in scored if s[1] >= SUCCESS_FIDELITY]
    if exact:
        return exact[0]
    return max(scored, key=lambda s: s[1])


@dataclass(frozen=True)
class OutcomeRecord:
    label: str
    probability: float  # absolute, including every post-selection stage
    conditional_probability: float
    accepted: bool
    target: str | None
    target_paths: tuple | None
    fidelity: float | None
    state: PhotonicState | None
    pattern: tuple = ()

    @property
    def success(self) -> bool:
        return self.accepted and self.fidelity is not None and self.fidelity >= SUCCESS_FIDELITY

    def to_dict(self) -> dict:
        return {
            "pattern": self.label,
            "probability": self.probability,
            "conditional_probability": self.conditional_probability,
            "accepted": self.accepted,
            "target": self.target,
            "target_paths": list(self.target_paths) if self.target_paths else None,
            "fidelity": self.fidelity,
            "success": self.success,
            "state": self.state.render() if self.state is not None else None,
        }


@dataclass(frozen=True)
class PipelineResult:
    stage_probabilities: tuple  # ((label, probability), ...)
    records: tuple
    final_state: PhotonicState | None
    outcomes: tuple = ()

    @property
    def branch_probability(self) -> float:
        p = 1.0
        for _, q in self.stage_probabilities:
            p *= q
        return p

    @property
    def success_probability(self) -> float:
        return sum(r.probability for r in self.records if r.success)

    @property
    def conditional_success(self) -> float:
        return sum(r.conditional_probability for r in self.records if r.success)


@dataclass(frozen=True)
class Pipeline:
    source: PhotonicState | None
    stages: tuple = ()
    targets: tuple = ()

    def compiled(self) -> "Pipeline":
        """Fuse runs of consecutive Evolve stages into one transform."""
        fused, run = [], []
        for st in self.stages:
            if isinstance(st, Evolve):
                run.append(st.transform)
                continue
            if run:
                fused.append(Evolve(compose(run)))
                run = []
            fused.append(st)
        if run:
            fused.append(Evolve(compose(run)))
        return Pipeline(self.source, tuple(fused), self.targets)

    def transform(self) -> ModeTransform:
        return compose([st.transform for st in self.stages if isinstance(st, Evolve)])

    def with_source(self, source: PhotonicState) -> "Pipeline":
        return Pipeline(source, self.stages, self.targets)

    def run(self, source: PhotonicState | None = None) -> PipelineResult:
        return run_pipeline(self if source is None else self.with_source(source))


def _candidates_for(state: PhotonicState, families):
    """``families`` holds (path set, paths, candidates) built once per run."""
    paths = state.paths()
    out = []
    for pset, fpaths, cands in families:
        if pset == paths:
            out.extend((tid, t, fpaths) for tid, t in cands)
    return out


def _record(outcome: DetectionOutcome, branch_p: float, targets) -> OutcomeRecord:
    st = outcome.conditional_state
    tid = tpaths = fid = None
    if st is not None and st.photon_count > 0:
        cands = _candidates_for(st, targets)
        if cands:
            tid, fid = classify_output(st, [(t, s) for t, s, _ in cands])
            tpaths = next(p for t, s, p in cands if t == tid)
    return OutcomeRecord(outcome.label(), branch_p * outcome.probability, outcome.probability,
                         outcome.in_window, tid, tpaths, fid, st, outcome.pattern)


def run_pipeline(pipeline: Pipeline) -> PipelineResult:
    if pipeline.source is None:
        raise ValueError("pipeline has no source state")
    state = pipeline.source
    stages: list = []
    terminal = None
    for st in pipeline.stages:
        if terminal is not None:
            raise ValueError("a detection or herald stage must be the last stage")
        if isinstance(st, Evolve):
            state = apply(state, st.transform)
        elif isinstance(st, KeepOnePhoton):
            p, state = postselect_one_photon_per_path(state, st.paths)
            stages.append((st.label, p))
        elif isinstance(st, KeepSlots):
            p, state = postselect_slot_window(state, st.paths, st.slots)
            stages.append((st.label, p))
        elif isinstance(st, KeepVacuum):
            p, state = postselect_vacuum(state, st.paths)
            stages.append((st.label, p))
        elif isinstance(st, (Detect, Herald)):
            terminal = st
        else:
            raise TypeError(f"unknown stage {st!r}")
        if state is None:
            return PipelineResult(tuple(stages), (), None)

    branch_p = 1.0
    for _, p in stages:
        branch_p *= p
    if terminal is None:
        outcomes = [DetectionOutcome((), 1.0, state, ((1.0, state),))]
    elif isinstance(terminal, Detect):
        outcomes = enumerate_outcomes(state, terminal.spec)
    else:
        outcomes = herald_paths(state, terminal.paths)
    families = [(frozenset(f.paths), f.paths, f.candidates()) for f in pipeline.targets]
    records = tuple(_record(o, branch_p, families) for o in outcomes)
    return PipelineResult(tuple(stages), records, state, tuple(outcomes))
