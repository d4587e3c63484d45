"""Sparse bosonic states over (path, polarization, time-slot) modes.

A state is a map from occupation configurations to complex amplitudes.
Every configuration is stored in canonical form: a tuple of
``(Mode, count)`` pairs sorted by mode, counts >= 1.  The amplitude of a
configuration refers to the normalized Fock vector

    prod_m (a_m^dagger)^{n_m} / sqrt(n_m!) |vac>

so bunched photons carry the usual bosonic factors.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

PRUNE_TOL = 1e-12
NORM_TOL = 1e-12


class Polarization(str, Enum):
    H = "H"
    V = "V"

    def flip(self) -> "Polarization":
        return Polarization.V if self is Polarization.H else Polarization.H


H = Polarization.H
V = Polarization.V

# Logical time-bins at the circuit input.
S_SLOT = 0
L_SLOT = 1


class Mode(NamedTuple):
    """One bosonic mode.  Tuple order gives the canonical mode order."""

    path: str
    pol: Polarization
    slot: int

    @classmethod
    def of(cls, path: str, pol: str | Polarization, slot: int = 0) -> "Mode":
        if slot < 0:
            raise ValueError(f"time slot must be non-negative, got {slot}")
        return cls(str(path), Polarization(pol), int(slot))

    def moved(self, *, path: str | None = None, pol: Polarization | None = None,
              slot: int | None = None) -> "Mode":
        return Mode(self.path if path is None else path,
                    self.pol if pol is None else pol,
                    self.slot if slot is None else slot)

    def label(self) -> str:
        return f"{self.pol.value}@{self.path}:{self.slot}"


Config = tuple  # tuple[tuple[Mode, int], ...]


def canonical_config(modes: Iterable[Mode] | Mapping[Mode, int]) -> Config:
    """Canonical occupation tuple from a multiset of modes or a count map."""
    if isinstance(modes, dict) or (not isinstance(modes, (tuple, list)) and isinstance(modes, Mapping)):
        counts = {m: n for m, n in modes.items() if n}
    else:
        counts = {}
        for m in modes:
            counts[m] = counts.get(m, 0) + 1
    for n in counts.values():
        if n < 0:
            raise ValueError("photon counts must be non-negative")
    return tuple(sorted(counts.items()))


def config_photons(cfg: Config) -> int:
    return sum(n for _, n in cfg)


def config_paths(cfg: Config) -> frozenset[str]:
    return frozenset(m.path for m, _ in cfg)


def _config_label(cfg: Config) -> str:
    parts = []
    for m, n in cfg:
        parts.append(m.label() if n == 1 else f"{m.label()}^{n}")
    return "|" + ", ".join(parts) + "⟩"


def format_amplitude(amp: complex) -> str:
    """``re`` or ``re+imi`` with 12 significant digits."""
    re = float(f"{amp.real:.12g}")
    im = float(f"{amp.imag:.12g}")
    re = 0.0 if re == 0 else re
    if im == 0:
        return f"{re:.12g}"
    return f"{re:.12g}{im:+.12g}i"


class PhotonicState:
    """Immutable sparse pure state with a fixed total photon number."""

    __slots__ = ("_terms", "_photons", "_paths")

    def __init__(self, terms: Mapping[Config, complex] | Iterable[tuple[Config, complex]] = (),
                 *, tol: float = PRUNE_TOL):
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[Config, complex] = defaultdict(complex)
        for cfg, amp in items:
            merged[canonical_config(dict(cfg))] += complex(amp)
        self._init_canonical(merged, tol)

    def _init_canonical(self, merged: Mapping[Config, complex], tol: float = PRUNE_TOL,
                        photons: int | None = None) -> None:
        kept = {cfg: amp for cfg, amp in merged.items() if abs(amp) >= tol}
        if photons is None or not kept:
            counts = {config_photons(cfg) for cfg in kept}
            if len(counts) > 1:
                raise ValueError(f"configurations with different photon numbers: {sorted(counts)}")
            photons = counts.pop() if counts else 0
        self._terms = MappingProxyType(dict(sorted(kept.items())))
        self._photons = photons
        self._paths = None

    @classmethod
    def _from_canonical(cls, terms: Mapping[Config, complex], tol: float = PRUNE_TOL,
                        photons: int | None = None) -> "PhotonicState":
        """Skip re-canonicalization for keys already in canonical form.

        ``photons`` is trusted when given (callers that preserve photon number).
        """
        obj = object.__new__(cls)
        obj._init_canonical(terms, tol, photons)
        return obj

    @classmethod
    def basis(cls, *modes: Mode, amplitude: complex = 1.0) -> "PhotonicState":
        """Single-configuration state; repeated modes mean bunched photons."""
        return cls({canonical_config(modes): amplitude})

    @classmethod
    def vacuum(cls) -> "PhotonicState":
        return cls({(): 1.0})

    @property
    def terms(self) -> Mapping[Config, complex]:
        return self._terms

    @property
    def photon_count(self) -> int:
        return self._photons

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def amplitude(self, cfg: Config | Iterable[Mode]) -> complex:
        if not isinstance(cfg, tuple) or (cfg and not isinstance(cfg[0][0], Mode)):
            cfg = canonical_config(cfg)
        return self._terms.get(cfg, 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._terms.values()))

    def paths(self) -> frozenset[str]:
        if self._paths is None:
            self._paths = frozenset(m.path for cfg in self._terms for m, _ in cfg)
        return self._paths

    def modes(self) -> frozenset[Mode]:
        return frozenset(m for cfg in self._terms for m, _ in cfg)

    def inner(self, other: "PhotonicState") -> complex:
        """<self|other>."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        total = 0j
        for cfg, a in small._terms.items():
            b = big._terms.get(cfg)
            if b is not None:
                total += (a.conjugate() * b) if small is self else (b.conjugate() * a)
        return total

    def scaled(self, factor: complex) -> "PhotonicState":
        return PhotonicState._from_canonical({c: a * factor for c, a in self._terms.items()},
                                             photons=self._photons)

    def __add__(self, other: "PhotonicState") -> "PhotonicState":
        merged = dict(self._terms)
        for cfg, a in other._terms.items():
            merged[cfg] = merged.get(cfg, 0j) + a
        return PhotonicState._from_canonical(merged)

    def __sub__(self, other: "PhotonicState") -> "PhotonicState":
        return self + other.scaled(-1)

    def __mul__(self, factor: complex) -> "PhotonicState":
        return self.scaled(factor)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PhotonicState):
            return NotImplemented
        return dict(self._terms) == dict(other._terms)

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def isclose(self, other: "PhotonicState", tol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= tol for k in keys)

    def filter(self, keep) -> "PhotonicState":
        """Unnormalized projection onto configurations where ``keep(cfg)`` holds."""
        return PhotonicState._from_canonical({c: a for c, a in self._terms.items() if keep(c)},
                                             photons=self._photons)

    def render(self) -> str:
        if not self._terms:
            return "0"
        return "\n".join(f"{format_amplitude(a)} {_config_label(c)}" for c, a in self._terms.items())

    def __repr__(self) -> str:
        body = "; ".join(self.render().splitlines()[:4])
        more = " ..." if len(self) > 4 else ""
        return f"PhotonicState({body}{more})"


@dataclass(frozen=True)
class StateParams:
    """alpha, beta weight |H..H> and |V..V>; delta, eta weight |S..S> and |L..L>."""

    alpha: complex
    beta: complex
    delta: complex
    eta: complex

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "eta"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        pol = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        tim = abs(self.delta) ** 2 + abs(self.eta) ** 2
        if abs(pol - 1) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {pol!r}, must equal 1")
        if abs(tim - 1) > NORM_TOL:
            raise ValueError(f"|delta|^2 + |eta|^2 = {tim!r}, must equal 1")

    @classmethod
    def from_squares(cls, alpha2: float, delta2: float, beta2: float | None = None,
                     eta2: float | None = None, *, phases: Mapping[str, float] | None = None,
                     tol: float = 1e-9) -> "StateParams":
        """Build from squared magnitudes; missing complements are inferred.

        ``phases`` maps any of alpha/beta/delta/eta to a phase in radians.
        """
        beta2 = 1.0 - alpha2 if beta2 is None else beta2
        eta2 = 1.0 - delta2 if eta2 is None else eta2
        for name, v in (("alpha2", alpha2), ("beta2", beta2), ("delta2", delta2), ("eta2", eta2)):
            if not (-tol <= v <= 1 + tol):
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(alpha2 + beta2 - 1) > tol:
            raise ValueError(f"alpha2 + beta2 = {alpha2 + beta2}, must equal 1")
        if abs(delta2 + eta2 - 1) > tol:
            raise ValueError(f"delta2 + eta2 = {delta2 + eta2}, must equal 1")
        mags = [max(v, 0.0) for v in (alpha2, beta2, delta2, eta2)]
        sp, st = mags[0] + mags[1], mags[2] + mags[3]
        mags = [mags[0] / sp, mags[1] / sp, mags[2] / st, mags[3] / st]
        phases = dict(phases or {})
        unknown = set(phases) - {"alpha", "beta", "delta", "eta"}
        if unknown:
            raise ValueError(f"unknown phase keys {sorted(unknown)}")
        vals = [math.sqrt(m) * cmath.exp(1j * phases.get(k, 0.0))
                for m, k in zip(mags, ("alpha", "beta", "delta", "eta"))]
        return cls(*vals)

    @classmethod
    def symmetric(cls) -> "StateParams":
        r = 1 / math.sqrt(2)
        return cls(r, r, r, r)

    @property
    def squares(self) -> dict[str, float]:
        return {"alpha2": abs(self.alpha) ** 2, "beta2": abs(self.beta) ** 2,
                "delta2": abs(self.delta) ** 2, "eta2": abs(self.eta) ** 2}

    def swapped(self) -> "StateParams":
        """Roles of H/V and S/L exchanged (the flipped second copy)."""
        return StateParams(self.beta, self.alpha, self.eta, self.delta)


def _check_distinct(paths: Sequence[str]) -> None:
    if len(set(paths)) != len(paths):
        raise ValueError(f"paths must be distinct, got {list(paths)}")


def build_ghz(params: StateParams, paths: Sequence[str]) -> PhotonicState:
    """(alpha|H..H> + beta|V..V>) x (delta|S..S> + eta|L..L>) over ``paths``."""
    paths = list(paths)
    if len(paths) < 2:
        raise ValueError("a GHZ state needs at least two paths")
    _check_distinct(paths)
    terms = {}
    for pol, pa in ((H, params.alpha), (V, params.beta)):
        for slot, ta in ((S_SLOT, params.delta), (L_SLOT, params.eta)):
            terms[canonical_config(Mode(p, pol, slot) for p in paths)] = pa * ta
    return PhotonicState(terms)


def build_hyper_pair(params: StateParams, path_a: str, path_b: str) -> PhotonicState:
    if path_a == path_b:
        raise ValueError("the two photons need distinct paths")
    return build_ghz(params, [path_a, path_b])


def target_state(sign_pol: complex, sign_time: complex, paths: Sequence[str],
                 slot_map: Mapping[str, tuple[int, int]] | None = None) -> PhotonicState:
    """1/2 (|H..H> + sign_pol|V..V>) x (|S..S> + sign_time|L..L>).

    ``slot_map[path] = (s_slot, l_slot)`` gives the physical slots that play
    the role of S and L on that path; unlisted paths use (0, 1).  The signs
    may be any unit-modulus complex numbers.
    """
    paths = list(paths)
    _check_distinct(paths)
    slot_map = dict(slot_map or {})
    unknown = set(slot_map) - set(paths)
    if unknown:
        raise ValueError(f"slot_map names paths not in the target: {sorted(unknown)}")
    slots = {p: tuple(slot_map.get(p, (S_SLOT, L_SLOT))) for p in paths}
    for p, (s, l) in slots.items():
        if s == l:
            raise ValueError(f"degenerate slot map on {p}: S and L both at slot {s}")
    for name, sgn in (("sign_pol", sign_pol), ("sign_time", sign_time)):
        if abs(abs(sgn) - 1) > 1e-12:
            raise ValueError(f"{name} must have unit modulus")
    terms = {}
    for pol, pa in ((H, 1), (V, sign_pol)):
        for which, ta in ((0, 1), (1, sign_time)):
            cfg = canonical_config(Mode(p, pol, slots[p][which]) for p in paths)
            terms[cfg] = pa * ta / 2
    return PhotonicState(terms)


def _runs(sorted_modes: tuple) -> Config:
    """Occupation tuple of an already sorted mode sequence."""
    out = []
    prev, n = None, 0
    for m in sorted_modes:
        if m == prev:
            n += 1
            continue
        if prev is not None:
            out.append((prev, n))
        prev, n = m, 1
    if prev is not None:
        out.append((prev, n))
    return tuple(out)


def _factorial_weight(cfg: Config) -> float:
    w = 1.0
    for _, n in cfg:
        if n > 1:
            w *= math.factorial(n)
    return w


def apply(state: PhotonicState, transform) -> PhotonicState:
    """Push every occupied creation operator through ``transform``.

    ``transform.image(mode)`` returns the linear image as a sequence of
    ``(Mode, coefficient)`` pairs.  The product over photons is expanded and
    regrouped into occupation configurations with bosonic factors.
    """
    images: dict[Mode, tuple] = {}
    out: dict[Config, complex] = defaultdict(complex)
    for cfg, amp in state.terms.items():
        partial: dict[tuple, complex] = {(): amp / math.sqrt(_factorial_weight(cfg))}
        for mode, count in cfg:
            img = images.get(mode)
            if img is None:
                img = images[mode] = tuple(transform.image(mode))
            for _ in range(count):
                nxt: dict[tuple, complex] = defaultdict(complex)
                for key, c in partial.items():
                    for m2, c2 in img:
                        nxt[key + (m2,)] += c * c2
                # regroup as multisets so interference happens early
                partial = defaultdict(complex)
                for key, c in nxt.items():
                    partial[tuple(sorted(key))] += c
        for key, c in partial.items():
            new_cfg = _runs(key)
            out[new_cfg] += c * math.sqrt(_factorial_weight(new_cfg))
    return PhotonicState._from_canonical(out, photons=state.photon_count)


def tensor(a: PhotonicState, b: PhotonicState) -> PhotonicState:
    shared = a.paths() & b.paths()
    if shared:
        raise ValueError(f"tensor factors share paths {sorted(shared)}")
    terms = {}
    for ca, xa in a.terms.items():
        for cb, xb in b.terms.items():
            terms[canonical_config(dict(ca + cb))] = xa * xb
    return PhotonicState._from_canonical(terms)


def normalize(state: PhotonicState) -> tuple[PhotonicState, float]:
    """Return (unit-norm state, prior norm).  prior_norm**2 is the branch weight."""
    n = state.norm()
    if n == 0:
        raise ValueError("cannot normalize the zero state")
    return state.scaled(1 / n), n
