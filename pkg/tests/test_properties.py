"""Randomized invariants across the library."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperconc import elements as el
from hyperconc.analysis import Dof, closed_forms, one_vs_rest, schmidt_per_dof
from hyperconc.fock import H, V, Mode, PhotonicState, StateParams, apply, canonical_config, tensor
from hyperconc.measurement import Basis, DetectionSpec, DetectorModel, Monitor, enumerate_outcomes
from hyperconc.protocols import Spm, run_scheme1, run_scheme2

from conftest import state_params
from oracles import scatter

PATHS = ("a", "b", "c")
MODES = [Mode(p, pol, s) for p in PATHS for pol in (H, V) for s in (0, 1)]


@st.composite
def fock_states(draw, max_photons=4):
    n = draw(st.integers(1, max_photons))
    k = draw(st.integers(1, 4))
    terms = {}
    for _ in range(k):
        modes = draw(st.lists(st.sampled_from(MODES), min_size=n, max_size=n))
        re, im = draw(st.floats(-1, 1)), draw(st.floats(-1, 1))
        terms[canonical_config(modes)] = complex(re, im)
    s = PhotonicState(terms)
    if s.norm() < 1e-3:
        s = PhotonicState.basis(*[MODES[0]] * n)
    return s * (1 / s.norm())


angle = st.floats(0, math.pi / 2)


@st.composite
def unitary_elements(draw):
    p, q = draw(st.lists(st.sampled_from(PATHS), min_size=2, max_size=2, unique=True))
    kind = draw(st.integers(0, 7))
    if kind == 0:
        return el.pbs_hv(p, q, p, q)
    if kind == 1:
        return el.pbs_diag(p, q, q, p)
    if kind == 2:
        return el.bs50(p, q, p, q)
    if kind == 3:
        th = draw(angle)
        return el.ubs(math.cos(th), math.sin(th), p, p, q, in2=q)
    if kind == 4:
        return el.waveplate(p, draw(angle))
    if kind == 5:
        return el.pockels(p, draw(st.sampled_from([{0}, {1}, {0, 1}])))
    if kind == 6:
        return el.delay(p, draw(st.integers(0, 2)))
    return el.pol_routed_delay(p, draw(st.sampled_from([H, V])))


circuits = st.lists(unitary_elements(), min_size=1, max_size=4).map(el.compose)


@given(fock_states(), circuits)
def test_norm_and_photon_number_preserved(state, circuit):
    out = apply(state, circuit)
    assert out.norm() == pytest.approx(1, abs=1e-10)
    assert out.photon_count == state.photon_count


@given(circuits)
def test_single_photon_isometry(circuit):
    assert el.is_isometric(circuit, MODES)


@given(fock_states(max_photons=3), circuits)
def test_apply_matches_permanent_oracle(state, circuit):
    mat, outs = circuit.matrix(MODES)
    index = {m: i for i, m in enumerate(MODES)}
    expect = {}
    for cfg, amp in state.terms.items():
        for out_cfg, a in scatter(dict(cfg), mat, index, outs).items():
            expect[out_cfg] = expect.get(out_cfg, 0) + amp * a
    got = apply(state, circuit)
    keys = set(expect) | set(got.terms)
    for k in keys:
        assert got.amplitude(k) == pytest.approx(expect.get(k, 0), abs=1e-10)


@given(fock_states(max_photons=2), circuits)
def test_apply_commutes_with_tensor(state, circuit):
    spectator = PhotonicState.basis(Mode("z", H, 0), amplitude=1j)
    lhs = apply(tensor(state, spectator), circuit)
    rhs = tensor(apply(state, circuit), spectator)
    assert lhs.isclose(rhs, tol=1e-10)


@given(st.lists(st.sampled_from(MODES), min_size=1, max_size=5))
def test_canonical_idempotent(modes):
    cfg = canonical_config(modes)
    assert canonical_config(dict(cfg)) == cfg
    assert canonical_config(list(reversed(modes))) == cfg


@given(fock_states(), st.sampled_from([Basis.HV, Basis.DIAG]),
       st.sampled_from([DetectorModel.THRESHOLD, DetectorModel.NUMBER_RESOLVING]))
def test_outcome_completeness(state, basis, model):
    spec = DetectionSpec([Monitor(p, basis) for p in sorted(state.paths())[:1]], model)
    outs = enumerate_outcomes(state, spec)
    assert sum(o.probability for o in outs) == pytest.approx(1, abs=1e-10)
    for o in outs:
        assert sum(w for w, _ in o.components) == pytest.approx(o.probability, abs=1e-12)


def _draw(seed):
    rng = np.random.default_rng(seed)
    a2, d2 = rng.uniform(0.02, 0.98, 2)
    phases = dict(zip(("alpha", "beta", "delta", "eta"), rng.uniform(-math.pi, math.pi, 4)))
    return StateParams.from_squares(a2, d2, phases=phases if seed % 2 else None)


@pytest.mark.parametrize("seed", range(100))
def test_closed_forms_hold(seed):
    p = _draw(seed)
    cf = closed_forms(p)
    simple = run_scheme1(p, Spm.SIMPLE, mixture=False).success_probability
    improved = run_scheme1(p, Spm.IMPROVED, mixture=False).success_probability
    assert simple == pytest.approx(cf.p0, abs=1e-9)
    assert improved == pytest.approx(cf.p1, abs=1e-9)
    assert simple == pytest.approx(improved / 4, abs=1e-12)
    if abs(p.alpha) >= abs(p.beta):
        assert run_scheme2(p).success_probability == pytest.approx(cf.p2, abs=1e-9)
    else:
        assert run_scheme2(p.swapped()).success_probability == pytest.approx(
            closed_forms(p.swapped()).p2, abs=1e-9)


@settings(max_examples=8)
@given(state_params(alpha_dominant=True))
def test_n_invariance(p):
    base1 = run_scheme1(p, mixture=False).success_probability
    base2 = run_scheme2(p).success_probability
    for n in (3, 4):
        assert run_scheme1(p, n=n, mixture=False).success_probability == pytest.approx(base1, abs=1e-9)
        assert run_scheme2(p, n=n).success_probability == pytest.approx(base2, abs=1e-9)


@settings(max_examples=10)
@given(state_params(complex_phases=True, alpha_dominant=True), st.sampled_from([2, 3]))
def test_successful_outputs_are_maximal(p, n):
    reps = [run_scheme1(p, Spm.IMPROVED, n=n, mixture=False), run_scheme2(p, n=n)]
    for rep in reps:
        assert rep.successful
        for r in rep.successful:
            for cut in one_vs_rest(sorted(r.state.paths())):
                for dof in Dof:
                    c = schmidt_per_dof(r.state, cut, dof).coefficients
                    assert c == pytest.approx((2 ** -0.5, 2 ** -0.5), abs=1e-9)
