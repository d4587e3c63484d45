"""Fidelities, per-degree-of-freedom Schmidt coefficients and closed forms."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .fock import H, V, PhotonicState, StateParams

FACTOR_TOL = 1e-10


class Dof(str, Enum):
    POLARIZATION = "polarization"
    TIME_BIN = "time_bin"


class NonFactorizableError(ValueError):
    """State does not split into a polarization part times a time-bin part."""


def fidelity(state: PhotonicState, target: PhotonicState) -> float:
    """|<target|state>|^2 for two normalized states on the same paths."""
    if state.paths() != target.paths():
        raise ValueError(f"path mismatch: {sorted(state.paths())} vs {sorted(target.paths())}")
    return abs(target.inner(state)) ** 2


@dataclass(frozen=True)
class SchmidtReport:
    dof: Dof
    bipartition: tuple
    coefficients: tuple

    @property
    def rank(self) -> int:
        return sum(1 for c in self.coefficients if c > 1e-12)


def _dof_tensors(state: PhotonicState, paths: Sequence[str]):
    """Split amplitudes into a polarization vector and a time-bin vector."""
    slots: dict[str, set] = {p: set() for p in paths}
    for cfg in state.terms:
        seen = {}
        for m, n in cfg:
            if n != 1 or m.path in seen:
                raise NonFactorizableError("needs exactly one photon per path in every term")
            seen[m.path] = m
        if set(seen) != set(paths):
            raise NonFactorizableError("every term must occupy every path of the bipartition")
        for p, m in seen.items():
            slots[p].add(m.slot)
    slot_lists = {p: sorted(s) for p, s in slots.items()}
    pol_index = {H: 0, V: 1}
    pol_dims = [2] * len(paths)
    time_dims = [len(slot_lists[p]) for p in paths]
    mat = np.zeros((int(np.prod(pol_dims)), int(np.prod(time_dims))), dtype=complex)
    for cfg, amp in state.terms.items():
        by_path = {m.path: m for m, _ in cfg}
        pi = np.ravel_multi_index([pol_index[by_path[p].pol] for p in paths], pol_dims)
        ti = np.ravel_multi_index([slot_lists[p].index(by_path[p].slot) for p in paths], time_dims)
        mat[pi, ti] = amp
    u, s, vh = np.linalg.svd(mat)
    total = np.linalg.norm(s)
    if total == 0:
        raise NonFactorizableError("zero state")
    residual = np.linalg.norm(s[1:]) / total
    if residual > FACTOR_TOL:
        raise NonFactorizableError(f"polarization and time-bin are entangled (residual {residual:.3g})")
    return (u[:, 0] * s[0] / total).reshape(pol_dims), vh[0].reshape(time_dims)


def schmidt_per_dof(state: PhotonicState, bipartition: tuple[Sequence[str], Sequence[str]],
                    dof: Dof | str) -> SchmidtReport:
    """Schmidt coefficients of one degree of freedom across ``bipartition``."""
    dof = Dof(dof)
    left, right = list(bipartition[0]), list(bipartition[1])
    if set(left) & set(right) or not left or not right:
        raise ValueError("bipartition sides must be non-empty and disjoint")
    paths = left + right
    if set(paths) != state.paths():
        raise ValueError(f"bipartition {sorted(paths)} does not cover state paths {sorted(state.paths())}")
    pol, tim = _dof_tensors(state, paths)
    tensor = pol if dof is Dof.POLARIZATION else tim
    rows = int(np.prod(tensor.shape[:len(left)]))
    coeffs = np.linalg.svd(tensor.reshape(rows, -1), compute_uv=False)
    coeffs = coeffs / np.linalg.norm(coeffs)
    return SchmidtReport(dof, (tuple(left), tuple(right)), tuple(float(c) for c in coeffs))


def one_vs_rest(paths: Sequence[str]):
    """Every bipartition that isolates a single party."""
    paths = list(paths)
    for p in paths:
        yield (p,), tuple(q for q in paths if q != p)


@dataclass(frozen=True)
class ClosedFormReport:
    p0: float
    p1: float
    p2: float
    f0: float
    f1: float
    f2: float

    def to_dict(self) -> dict:
        return asdict(self)


def closed_forms(params: StateParams) -> ClosedFormReport:
    """Printed success probabilities and threshold-mixture weights."""
    a, b, d, e = (abs(x) for x in (params.alpha, params.beta, params.delta, params.eta))
    p0 = (a * b * d * e) ** 2
    f1 = (a * d) ** 4 + (a * e) ** 4 + (a * b * d * d) ** 2 + (a * b * e * e) ** 2
    return ClosedFormReport(
        p0=p0,
        p1=4 * p0,
        p2=4 * (b * d * e) ** 2,
        f0=(a * a * d * e) ** 2,
        f1=f1,
        f2=4 * p0,
    )

