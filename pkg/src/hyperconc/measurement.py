"""Detection, post-selection and the mixtures left by threshold detectors."""

from __future__ import annotations

import math
from collections import defaultdict
from functools import lru_cache
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .elements import compose, pbs_diag, pbs_hv
from .fock import Config, PhotonicState, apply, normalize

NORMALIZED_TOL = 1e-9
PROPORTIONAL_TOL = 1e-10


class DetectorModel(str, Enum):
    THRESHOLD = "threshold"
    NUMBER_RESOLVING = "pnr"


class Basis(str, Enum):
    HV = "hv"
    DIAG = "diag"


# Port suffixes: detector behind the transmitted / reflected PBS output.
PORT_LABELS = {Basis.HV: ("H", "V"), Basis.DIAG: ("+", "-")}


@dataclass(frozen=True)
class Monitor:
    """One measured path: a PBS in ``basis`` followed by two time-resolving detectors.

    ``window`` is the set of slots whose clicks count as accepted; ``None``
    accepts every slot.
    """

    path: str
    basis: Basis = Basis.DIAG
    window: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        if self.window is not None:
            object.__setattr__(self, "window", frozenset(self.window))

    def ports(self) -> tuple[str, str]:
        a, b = PORT_LABELS[self.basis]
        return f"{self.path}{a}", f"{self.path}{b}"


@dataclass(frozen=True)
class DetectionSpec:
    monitors: tuple
    model: DetectorModel = DetectorModel.NUMBER_RESOLVING

    def __post_init__(self):
        object.__setattr__(self, "monitors", tuple(self.monitors))
        object.__setattr__(self, "model", DetectorModel(self.model))
        paths = [m.path for m in self.monitors]
        if len(set(paths)) != len(paths):
            raise ValueError(f"path monitored twice: {paths}")

    @property
    def paths(self) -> frozenset[str]:
        return frozenset(m.path for m in self.monitors)


PatternKey = tuple  # ((path, port_label, slot), count), sorted


@dataclass(frozen=True)
class DetectionOutcome:
    pattern: PatternKey
    probability: float
    conditional_state: PhotonicState | None
    components: tuple = ()  # ((weight, normalized PhotonicState), ...) summing to probability
    in_window: bool = True
    model: DetectorModel = DetectorModel.NUMBER_RESOLVING

    @property
    def is_pure(self) -> bool:
        return self.conditional_state is not None

    def label(self) -> str:
        if not self.pattern:
            return "no click"
        return ", ".join(f"{label}{path}@{slot}" + (f"x{n}" if n > 1 else "")
                         for (path, label, slot), n in self.pattern)

    def count(self, paths: Iterable[str] | None = None) -> int:
        """Total clicks (threshold) or photons (resolving) on ``paths``."""
        wanted = None if paths is None else set(paths)
        return sum(n for (path, _, _), n in self.pattern if wanted is None or path in wanted)


def _check_normalized(state: PhotonicState) -> None:
    if abs(state.norm() - 1) > NORMALIZED_TOL:
        raise ValueError(f"state must be normalized (norm {state.norm():.12g})")


def _collapse(branches: Sequence[PhotonicState]) -> tuple[float, PhotonicState | None, tuple]:
    """Mixture of unnormalized branches -> (weight, pure state or None, components)."""
    weights = [b.norm() ** 2 for b in branches]
    total = sum(weights)
    comps = tuple((w, b.scaled(1 / math.sqrt(w))) for w, b in zip(weights, branches) if w > 0)
    if not comps:
        return 0.0, None, ()
    ref_w, ref = max(comps, key=lambda c: c[0])
    pure = all(abs(abs(ref.inner(s)) - 1) <= PROPORTIONAL_TOL for _, s in comps)
    if pure:
        return total, ref, ((total, ref),)
    return total, None, comps


@lru_cache(maxsize=256)
def _routing(spec: DetectionSpec):
    transforms, port_of = [], {}
    for mon in spec.monitors:
        out_a, out_b = mon.ports()
        idle = f"{mon.path}~"
        maker = pbs_diag if mon.basis is Basis.DIAG else pbs_hv
        transforms.append(maker(mon.path, idle, out_a, out_b))
        la, lb = PORT_LABELS[mon.basis]
        port_of[out_a] = (mon, la)
        port_of[out_b] = (mon, lb)
    return compose(transforms), port_of


def enumerate_outcomes(state: PhotonicState, spec: DetectionSpec) -> list[DetectionOutcome]:
    """All click patterns of ``spec`` on ``state`` with conditional survivor states.

    Each monitored path is routed through its PBS; the detectors count
    photons per port and slot without seeing polarization.  Survivor states
    are pure whenever the unresolved detail leaves no which-path record.
    """
    _check_normalized(state)
    missing = spec.paths - state.paths()
    if missing:
        raise ValueError(f"monitored paths absent from state: {sorted(missing)}")
    routing, port_of = _routing(spec)
    routed = apply(state, routing)
    total = routed.photon_count

    # pattern -> fine detected config -> survivor terms
    groups: dict = defaultdict(lambda: defaultdict(dict))
    window_ok: dict = {}
    for cfg, amp in routed.terms.items():
        detected, rest = [], []
        for m, n in cfg:
            (detected if m.path in port_of else rest).append((m, n))
        counts: dict = defaultdict(int)
        inside = True
        for m, n in detected:
            mon, label = port_of[m.path]
            counts[(mon.path, label, m.slot)] += n
            if mon.window is not None and m.slot not in mon.window:
                inside = False
        if spec.model is DetectorModel.THRESHOLD:
            counts = {k: 1 for k in counts}
        key = tuple(sorted(counts.items()))
        groups[key][tuple(detected)][tuple(rest)] = amp
        window_ok[key] = inside

    outcomes = []
    for key in sorted(groups):
        branches = [PhotonicState._from_canonical(terms, photons=total - sum(n for _, n in det))
                    for det, terms in groups[key].items()]
        prob, pure, comps = _collapse(branches)
        outcomes.append(DetectionOutcome(key, prob, pure, comps, window_ok[key], spec.model))
    return outcomes


def outcome_total(outcomes: Iterable[DetectionOutcome]) -> float:
    return sum(o.probability for o in outcomes)


def merge_by_clicks(outcomes: Iterable[DetectionOutcome]) -> dict[PatternKey, float]:
    """Coarse-grain number-resolved outcomes into threshold click patterns."""
    merged: dict = defaultdict(float)
    for o in outcomes:
        merged[tuple((k, 1) for k, _ in o.pattern)] += o.probability
    return dict(merged)


def _postselect(state: PhotonicState, keep) -> tuple[float, PhotonicState | None]:
    total = state.norm() ** 2
    if total == 0:
        raise ValueError("cannot post-select the zero state")
    kept = state.filter(keep)
    if kept.is_zero():
        return 0.0, None
    out, n = normalize(kept)
    return n ** 2 / total, out


def _as_paths(paths: str | Iterable[str]) -> frozenset[str]:
    return frozenset((paths,)) if isinstance(paths, str) else frozenset(paths)


def postselect_one_photon_per_path(state: PhotonicState, paths: str | Iterable[str]
                                   ) -> tuple[float, PhotonicState | None]:
    """Keep configurations with exactly one photon on each listed path."""
    wanted = _as_paths(paths)

    def keep(cfg: Config) -> bool:
        counts = defaultdict(int)
        for m, n in cfg:
            if m.path in wanted:
                counts[m.path] += n
        return all(counts[p] == 1 for p in wanted)

    return _postselect(state, keep)


def postselect_slot_window(state: PhotonicState, paths: str | Iterable[str],
                           kept_slots: Iterable[int]) -> tuple[float, PhotonicState | None]:
    """Keep configurations whose photons on ``paths`` all sit in ``kept_slots``."""
    wanted, slots = _as_paths(paths), frozenset(kept_slots)
    return _postselect(state, lambda cfg: all(m.slot in slots for m, _ in cfg if m.path in wanted))


def postselect_vacuum(state: PhotonicState, paths: str | Iterable[str]
                      ) -> tuple[float, PhotonicState | None]:
    """Keep configurations with no photon on ``paths`` (their detectors stay dark)."""
    wanted = _as_paths(paths)
    return _postselect(state, lambda cfg: not any(m.path in wanted for m, _ in cfg))


def herald_paths(state: PhotonicState, paths: Iterable[str]) -> list[DetectionOutcome]:
    """Non-destructive which-path split: branch on photon counts per listed path."""
    _check_normalized(state)
    wanted = frozenset(paths)
    groups: dict = defaultdict(dict)
    for cfg, amp in state.terms.items():
        counts = defaultdict(int)
        for m, n in cfg:
            if m.path in wanted:
                counts[m.path] += n
        key = tuple(sorted(((p, "", 0), n) for p, n in counts.items()))
        groups[key][cfg] = amp
    outcomes = []
    for key in sorted(groups):
        st, n = normalize(PhotonicState._from_canonical(groups[key]))
        outcomes.append(DetectionOutcome(key, n ** 2, st, ((n ** 2, st),)))
    return outcomes


MIXTURE_KINDS = {0: "vacuum", 1: "one_photon", 2: "two_photon_success"}


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    kind: str
    photons: int
    branches: int  # number of pure branches pooled into this component

    @property
    def summary(self) -> str:
        return f"{self.kind}: {self.photons} photon(s) on the kept paths, {self.branches} pure branch(es)"


@dataclass(frozen=True)
class MixtureReport:
    components: tuple
    model: DetectorModel = DetectorModel.THRESHOLD

    def weight(self, photons: int) -> float:
        return sum(c.weight for c in self.components if c.photons == photons)

    @property
    def f0(self) -> float:
        return self.weight(0)

    @property
    def f1(self) -> float:
        return self.weight(1)

    @property
    def f2(self) -> float:
        return self.weight(2)

    @property
    def total(self) -> float:
        return sum(c.weight for c in self.components)

    def normalized(self) -> dict[str, float]:
        t = self.total
        return {c.kind: (c.weight / t if t else 0.0) for c in self.components}

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "f0": self.f0, "f1": self.f1, "f2": self.f2, "total": self.total,
            "normalized": self.normalized(),
            "components": [{"kind": c.kind, "weight": c.weight, "photons": c.photons,
                            "summary": c.summary} for c in self.components],
        }


def assemble_mixture(outcomes: Sequence[DetectionOutcome], sides: Mapping[str, Iterable[str]],
                     kept_paths: Iterable[str]) -> MixtureReport:
    """Pool the outcomes that each party would accept into photon-number components.

    ``sides`` maps a party to the monitored paths of its measurement device.
    Threshold detectors accept any outcome with at least one click per
    party; number-resolving detectors require exactly one photon per party.
    Components are keyed by the photon number left on ``kept_paths``.
    """
    if not outcomes:
        return MixtureReport((), DetectorModel.THRESHOLD)
    models = {o.model for o in outcomes}
    if len(models) != 1:
        raise ValueError("outcomes come from different detector models")
    model = models.pop()
    kept = frozenset(kept_paths)
    pooled: dict[int, list] = defaultdict(lambda: [0.0, 0])
    for o in outcomes:
        per_side = [o.count(paths) for paths in sides.values()]
        if model is DetectorModel.THRESHOLD:
            accepted = all(c >= 1 for c in per_side)
        else:
            accepted = all(c == 1 for c in per_side)
        if not accepted:
            continue
        for w, st in o.components:
            photons = {sum(n for m, n in cfg if m.path in kept) for cfg in st.terms}
            if len(photons) != 1:
                raise ValueError("component mixes photon numbers on the kept paths")
            k = photons.pop()
            pooled[k][0] += w
            pooled[k][1] += 1
    comps = tuple(MixtureComponent(w, MIXTURE_KINDS.get(k, f"{k}_photon"), k, nb)
                  for k, (w, nb) in sorted(pooled.items()))
    return MixtureReport(comps, model)


def assemble_threshold_mixture(outcomes: Sequence[DetectionOutcome], sides: Mapping[str, Iterable[str]],
                               kept_paths: Iterable[str]) -> MixtureReport:
    """Mixture accepted by threshold detectors: F0 (vacuum), F1 (one photon), F2."""
    if any(o.model is not DetectorModel.THRESHOLD for o in outcomes):
        raise ValueError("threshold mixture needs outcomes enumerated with THRESHOLD detectors")
    return assemble_mixture(outcomes, sides, kept_paths)
