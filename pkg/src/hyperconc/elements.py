"""Optical elements compiled to linear maps on mode creation operators.

Each constructor returns a :class:`ModeTransform`.  A transform acts on the
modes of the paths in its ``domain``; every other mode passes through
untouched.  Time slots are unbounded, so a transform is a rule evaluated per
mode rather than a stored matrix; :meth:`ModeTransform.matrix` materializes
it on any finite set of input modes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .fock import H, V, Mode, Polarization, PRUNE_TOL

Image = tuple  # tuple[tuple[Mode, complex], ...]
SQRT_HALF = 1 / math.sqrt(2)


class TransformDomainError(ValueError):
    """A transform was asked to act on a mode outside its declared domain."""


@dataclass(frozen=True)
class ModeTransform:
    domain: frozenset
    rule: Callable[[Mode], Image] = field(compare=False, repr=False)
    name: str = "transform"
    isometric: bool = True
    causal: bool = True

    def image(self, mode: Mode) -> Image:
        if mode.path not in self.domain:
            return ((mode, 1.0),)
        try:
            return self.rule(mode)
        except KeyError as exc:
            raise TransformDomainError(f"{self.name}: no mapping for mode {mode.label()}") from exc

    def then(self, other: "ModeTransform") -> "ModeTransform":
        return compose([self, other])

    def matrix(self, modes: Sequence[Mode]) -> tuple[np.ndarray, list[Mode]]:
        """Columns are the images of ``modes``; rows are the output modes."""
        images = [self.image(m) for m in modes]
        outs = sorted({m for img in images for m, _ in img})
        index = {m: i for i, m in enumerate(outs)}
        mat = np.zeros((len(outs), len(modes)), dtype=complex)
        for j, img in enumerate(images):
            for m, c in img:
                mat[index[m], j] += c
        return mat, outs

    def __repr__(self) -> str:
        return f"ModeTransform({self.name}, domain={sorted(self.domain)})"


def _merge(pairs: Iterable[tuple[Mode, complex]]) -> Image:
    acc: dict[Mode, complex] = defaultdict(complex)
    for m, c in pairs:
        acc[m] += c
    return tuple((m, c) for m, c in sorted(acc.items()) if abs(c) >= PRUNE_TOL)


def is_isometric(transform: ModeTransform, modes: Sequence[Mode], tol: float = 1e-12) -> bool:
    """True when the images of ``modes`` are orthonormal."""
    mat, _ = transform.matrix(list(modes))
    gram = mat.conj().T @ mat
    return bool(np.allclose(gram, np.eye(len(modes)), atol=tol, rtol=0))


def domain_modes(paths: Iterable[str], slots: Iterable[int] = (0, 1, 2)) -> list[Mode]:
    return [Mode(p, pol, s) for p in sorted(paths) for pol in (H, V) for s in slots]


def identity(paths: Iterable[str] = ()) -> ModeTransform:
    return ModeTransform(frozenset(paths), lambda m: ((m, 1.0),), name="identity")


def compose(elements: Sequence[ModeTransform]) -> ModeTransform:
    """Apply ``elements`` in order (first element acts first)."""
    elements = list(elements)
    if not elements:
        return identity()
    if len(elements) == 1:
        return elements[0]
    cache: dict[Mode, Image] = {}

    def rule(mode: Mode) -> Image:
        hit = cache.get(mode)
        if hit is not None:
            return hit
        current: Image = ((mode, 1.0),)
        for el in elements:
            current = _merge((m2, c * c2) for m, c in current for m2, c2 in el.image(m))
        cache[mode] = current
        return current

    domain = frozenset().union(*(el.domain for el in elements))
    return ModeTransform(domain, rule, name=" ; ".join(el.name for el in elements),
                         isometric=all(el.isometric for el in elements),
                         causal=all(el.causal for el in elements))


def _distinct(kind: str, *ports: str) -> None:
    if len(set(ports)) != len(ports):
        raise ValueError(f"{kind}: port collision among {ports}")


def pbs_hv(in1: str, in2: str, out1: str, out2: str) -> ModeTransform:
    """Transmit H (in1->out1, in2->out2), reflect V (in1->out2, in2->out1)."""
    _distinct("pbs_hv", in1, in2)
    _distinct("pbs_hv", out1, out2)
    route = {(in1, H): out1, (in2, H): out2, (in1, V): out2, (in2, V): out1}
    return ModeTransform(frozenset((in1, in2)),
                         lambda m: ((m.moved(path=route[m.path, m.pol]), 1.0),),
                         name=f"pbs_hv({in1},{in2}->{out1},{out2})")


def pbs_diag(in1: str, in2: str, out1: str, out2: str) -> ModeTransform:
    """PBS at 45 degrees: transmits |+>, reflects |->, |+-> = (|H> +- |V>)/sqrt2."""
    _distinct("pbs_diag", in1, in2)
    _distinct("pbs_diag", out1, out2)
    # |+> keeps its port index; |-> swaps it.
    plus_out = {in1: out1, in2: out2}
    minus_out = {in1: out2, in2: out1}

    def rule(m: Mode) -> Image:
        p, q = plus_out[m.path], minus_out[m.path]
        sign = 1.0 if m.pol is H else -1.0
        # (|+>_p + sign |->_q)/sqrt2 expanded in H/V.
        return _merge([
            (Mode(p, H, m.slot), 0.5), (Mode(p, V, m.slot), 0.5),
            (Mode(q, H, m.slot), 0.5 * sign), (Mode(q, V, m.slot), -0.5 * sign),
        ])

    return ModeTransform(frozenset((in1, in2)), rule, name=f"pbs_diag({in1},{in2}->{out1},{out2})")


def bs50(in_u: str, in_d: str, out_u: str, out_d: str) -> ModeTransform:
    """in_u -> (out_u + out_d)/sqrt2, in_d -> (out_u - out_d)/sqrt2."""
    _distinct("bs50", in_u, in_d)
    _distinct("bs50", out_u, out_d)
    sign = {in_u: 1.0, in_d: -1.0}
    return ModeTransform(
        frozenset((in_u, in_d)),
        lambda m: ((m.moved(path=out_u), SQRT_HALF), (m.moved(path=out_d), sign[m.path] * SQRT_HALF)),
        name=f"bs50({in_u},{in_d}->{out_u},{out_d})")


def ubs(t: complex, r: complex, in1: str, out_t: str, out_r: str, in2: str | None = None,
        tol: float = 1e-9) -> ModeTransform:
    """Unbalanced splitter: in1 -> t out_t + r out_r.

    The optional second input takes the orthogonal column
    in2 -> -conj(r) out_t + conj(t) out_r.
    """
    if abs(abs(t) ** 2 + abs(r) ** 2 - 1) > tol:
        raise ValueError(f"ubs: |t|^2 + |r|^2 = {abs(t) ** 2 + abs(r) ** 2}, must equal 1")
    _distinct("ubs", out_t, out_r)
    cols = {in1: (t, r)}
    if in2 is not None:
        _distinct("ubs", in1, in2)
        cols[in2] = (-complex(r).conjugate(), complex(t).conjugate())

    def rule(m: Mode) -> Image:
        ct, cr = cols[m.path]
        return _merge([(m.moved(path=out_t), ct), (m.moved(path=out_r), cr)])

    return ModeTransform(frozenset(cols), rule, name=f"ubs(t={t:.6g},r={r:.6g})")


def waveplate(path: str, theta: float) -> ModeTransform:
    """|H> -> cos|H> + sin|V>, |V> -> -sin|H> + cos|V>."""
    c, s = math.cos(theta), math.sin(theta)
    col = {H: ((H, c), (V, s)), V: ((H, -s), (V, c))}
    return ModeTransform(frozenset((path,)),
                         lambda m: _merge((m.moved(pol=p), x) for p, x in col[m.pol]),
                         name=f"waveplate({path},{theta:.6g})")


def pol_flip(path: str) -> ModeTransform:
    """Half-wave-plate bit flip H <-> V."""
    return ModeTransform(frozenset((path,)), lambda m: ((m.moved(pol=m.pol.flip()), 1.0),),
                         name=f"pol_flip({path})")


def pockels(path: str, active_slots: Iterable[int]) -> ModeTransform:
    """Flip H <-> V only inside ``active_slots``."""
    active = frozenset(active_slots)

    def rule(m: Mode) -> Image:
        if m.slot in active:
            return ((m.moved(pol=m.pol.flip()), 1.0),)
        return ((m, 1.0),)

    return ModeTransform(frozenset((path,)), rule, name=f"pockels({path},{sorted(active)})")


def delay(path: str, shift: int = 1) -> ModeTransform:
    if shift < 0:
        raise ValueError(f"delay: negative shift {shift}")
    return ModeTransform(frozenset((path,)), lambda m: ((m.moved(slot=m.slot + shift), 1.0),),
                         name=f"delay({path},{shift})")


def plain_ui(path: str, shift: int = 1) -> ModeTransform:
    """Unbalanced interferometer in its normalized single-output form.

    |X, s> -> (|X, s> + |X, s+shift>)/sqrt2.  Images of adjacent slots
    overlap, so the map is not an isometry; it preserves norm only on inputs
    whose early and late components are already orthogonal elsewhere.
    """
    if shift < 1:
        raise ValueError(f"plain_ui: shift must be >= 1, got {shift}")
    return ModeTransform(
        frozenset((path,)),
        lambda m: ((m, SQRT_HALF), (m.moved(slot=m.slot + shift), SQRT_HALF)),
        name=f"plain_ui({path},{shift})", isometric=False)


def pol_routed_delay(path: str, long_pol: str | Polarization, shift: int = 1) -> ModeTransform:
    """Deterministic interferometer: ``long_pol`` takes the long arm."""
    long_pol = Polarization(long_pol)
    if shift < 1:
        raise ValueError(f"pol_routed_delay: shift must be >= 1, got {shift}")

    def rule(m: Mode) -> Image:
        if m.pol is long_pol:
            return ((m.moved(slot=m.slot + shift), 1.0),)
        return ((m, 1.0),)

    return ModeTransform(frozenset((path,)), rule, name=f"pol_routed_delay({path},{long_pol.value})")


def tb_converter(in_path: str, out_u: str, out_d: str) -> ModeTransform:
    """Pockels cells plus routed interferometers of the improved measurement.

    Maps the time-bin into a spatial which-port bit; every output lands in
    slot 1.  Inputs outside slots {0, 1} are rejected.
    """
    _distinct("tb_converter", out_u, out_d)
    table = {
        (H, 0): Mode(out_d, V, 1),
        (V, 0): Mode(out_u, V, 1),
        (H, 1): Mode(out_d, H, 1),
        (V, 1): Mode(out_u, H, 1),
    }
    return ModeTransform(frozenset((in_path,)), lambda m: ((table[m.pol, m.slot], 1.0),),
                         name=f"tb_converter({in_path}->{out_u},{out_d})")


def tb_flip(path: str) -> ModeTransform:
    """Active-switch time-bin flip S <-> L.

    The switch delays the early bin by two slots and the output time
    reference is re-zeroed one slot later, so slot 1 maps to slot 0 in
    labels.  This is the only element marked non-causal.
    """
    swap = {0: 1, 1: 0}
    return ModeTransform(frozenset((path,)), lambda m: ((m.moved(slot=swap[m.slot]), 1.0),),
                         name=f"tb_flip({path})", causal=False)


def propagate(src: str, dst: str) -> ModeTransform:
    """Free propagation from one path label to another."""
    return ModeTransform(frozenset((src,)), lambda m: ((m.moved(path=dst), 1.0),),
                         name=f"propagate({src}->{dst})")


class ElementKind(str, Enum):
    PBS_HV = "pbs_hv"
    PBS_DIAG = "pbs_diag"
    BS50 = "bs50"
    UBS = "ubs"
    WAVEPLATE = "waveplate"
    POL_FLIP = "pol_flip"
    POCKELS = "pockels"
    DELAY = "delay"
    PLAIN_UI = "plain_ui"
    POL_ROUTED_DELAY = "pol_routed_delay"
    TB_CONVERTER = "tb_converter"
    TB_FLIP = "tb_flip"
    PROPAGATE = "propagate"


@dataclass(frozen=True)
class Signature:
    n_in: int
    n_out: int  # 0: acts in place on its single input
    required: tuple = ()
    optional: Mapping = field(default_factory=dict)


SIGNATURES: dict[ElementKind, Signature] = {
    ElementKind.PBS_HV: Signature(2, 2),
    ElementKind.PBS_DIAG: Signature(2, 2),
    ElementKind.BS50: Signature(2, 2),
    ElementKind.UBS: Signature(1, 2, ("t", "r")),
    ElementKind.WAVEPLATE: Signature(1, 0, ("theta",)),
    ElementKind.POL_FLIP: Signature(1, 0),
    ElementKind.POCKELS: Signature(1, 0, ("active_slots",)),
    ElementKind.DELAY: Signature(1, 0, (), {"delta": 1}),
    ElementKind.PLAIN_UI: Signature(1, 0, (), {"delta": 1}),
    ElementKind.POL_ROUTED_DELAY: Signature(1, 0, ("long_pol",), {"delta": 1}),
    ElementKind.TB_CONVERTER: Signature(1, 2),
    ElementKind.TB_FLIP: Signature(1, 0),
    ElementKind.PROPAGATE: Signature(1, 1),
}


@dataclass(frozen=True)
class ElementSpec:
    """A named element with port bindings and evaluated parameters."""

    kind: ElementKind
    inputs: tuple
    outputs: tuple = ()
    params: Mapping = field(default_factory=dict)

    def build(self) -> ModeTransform:
        kind = ElementKind(self.kind)
        sig = SIGNATURES[kind]
        if len(self.inputs) != sig.n_in or len(self.outputs) != sig.n_out:
            raise ValueError(f"{kind.value}: expected {sig.n_in} inputs and {sig.n_out} outputs")
        missing = [k for k in sig.required if k not in self.params]
        if missing:
            raise ValueError(f"{kind.value}: missing parameters {missing}")
        p = {**sig.optional, **self.params}
        ins, outs = self.inputs, self.outputs
        if kind is ElementKind.PBS_HV:
            return pbs_hv(*ins, *outs)
        if kind is ElementKind.PBS_DIAG:
            return pbs_diag(*ins, *outs)
        if kind is ElementKind.BS50:
            return bs50(*ins, *outs)
        if kind is ElementKind.UBS:
            return ubs(p["t"], p["r"], ins[0], *outs)
        if kind is ElementKind.WAVEPLATE:
            return waveplate(ins[0], p["theta"])
        if kind is ElementKind.POL_FLIP:
            return pol_flip(ins[0])
        if kind is ElementKind.POCKELS:
            return pockels(ins[0], p["active_slots"])
        if kind is ElementKind.DELAY:
            return delay(ins[0], int(p["delta"]))
        if kind is ElementKind.PLAIN_UI:
            return plain_ui(ins[0], int(p["delta"]))
        if kind is ElementKind.POL_ROUTED_DELAY:
            return pol_routed_delay(ins[0], p["long_pol"], int(p["delta"]))
        if kind is ElementKind.TB_CONVERTER:
            return tb_converter(ins[0], *outs)
        if kind is ElementKind.TB_FLIP:
            return tb_flip(ins[0])
        return propagate(ins[0], outs[0])
