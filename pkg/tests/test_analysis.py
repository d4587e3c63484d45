import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperconc import elements as el
from hyperconc.analysis import (
    Dof,
    NonFactorizableError,
    closed_forms,
    fidelity,
    one_vs_rest,
    schmidt_per_dof,
)
from hyperconc.fock import H, Mode, PhotonicState, StateParams, apply, build_ghz, build_hyper_pair, target_state

from conftest import state_params


def test_fidelity_basics(ref_params):
    pp = target_state(1, 1, ["a", "b"])
    assert fidelity(pp, pp) == pytest.approx(1)
    assert fidelity(pp, target_state(-1, -1, ["a", "b"])) == pytest.approx(0, abs=1e-15)
    a, b, d, e = (math.sqrt(x) for x in (0.8, 0.2, 0.6, 0.4))
    expect = ((a + b) * (d + e) / 2) ** 2
    assert expect == pytest.approx(0.89091, abs=5e-6)
    assert fidelity(build_hyper_pair(ref_params, "a", "b"), pp) == pytest.approx(expect, abs=1e-12)


def test_fidelity_path_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        fidelity(target_state(1, 1, ["a", "b"]), target_state(1, 1, ["a", "c"]))


@given(state_params(complex_phases=True), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_fidelity_symmetric_and_phase_blind(params, g1, g2):
    s = build_hyper_pair(params, "a", "b")
    t = target_state(1, -1, ["a", "b"])
    f = fidelity(s, t)
    assert fidelity(t, s) == pytest.approx(f, abs=1e-12)
    assert fidelity(s * cmath.exp(1j * g1), t * cmath.exp(1j * g2)) == pytest.approx(f, abs=1e-12)


class TestSchmidt:
    def test_pair_coefficients(self, ref_params):
        s = build_hyper_pair(ref_params, "a", "b")
        pol = schmidt_per_dof(s, (["a"], ["b"]), Dof.POLARIZATION)
        tim = schmidt_per_dof(s, (["a"], ["b"]), Dof.TIME_BIN)
        assert pol.coefficients == pytest.approx((math.sqrt(0.8), math.sqrt(0.2)))
        assert tim.coefficients == pytest.approx((math.sqrt(0.6), math.sqrt(0.4)))
        assert pol.rank == 2

    def test_maximal(self):
        t = target_state(-1, 1, ["a", "b"])
        for dof in Dof:
            assert schmidt_per_dof(t, (["a"], ["b"]), dof).coefficients == pytest.approx((2 ** -0.5,) * 2)

    def test_product(self):
        s = build_hyper_pair(StateParams.from_squares(1, 0.5), "a", "b")
        rep = schmidt_per_dof(s, (["a"], ["b"]), "polarization")
        assert rep.coefficients == pytest.approx((1, 0)) and rep.rank == 1

    def test_ghz_bipartitions(self, ref_params):
        s = build_ghz(ref_params, ["a", "b", "c"])
        for cut in one_vs_rest(["a", "b", "c"]):
            assert schmidt_per_dof(s, cut, Dof.TIME_BIN).coefficients == pytest.approx((math.sqrt(0.6), math.sqrt(0.4)))

    def test_non_factorizable(self):
        s = (PhotonicState.basis(Mode("a", H, 0), Mode("b", H, 0))
             + PhotonicState.basis(Mode("a", "V", 1), Mode("b", "V", 1))
             + PhotonicState.basis(Mode("a", H, 1), Mode("b", H, 0))) * (1 / math.sqrt(3))
        with pytest.raises(NonFactorizableError):
            schmidt_per_dof(s, (["a"], ["b"]), Dof.POLARIZATION)

    def test_bipartition_checks(self):
        t = target_state(1, 1, ["a", "b"])
        with pytest.raises(ValueError):
            schmidt_per_dof(t, (["a"], ["a"]), Dof.POLARIZATION)
        with pytest.raises(ValueError):
            schmidt_per_dof(t, (["a"], ["c"]), Dof.POLARIZATION)

    @given(state_params(), st.floats(0, math.pi / 2), st.floats(0, math.pi / 2))
    def test_local_waveplates_preserve_coefficients(self, params, t1, t2):
        s = build_hyper_pair(params, "a", "b")
        rotated = apply(s, el.compose([el.waveplate("a", t1), el.waveplate("b", t2)]))
        for dof in Dof:
            before = schmidt_per_dof(s, (["a"], ["b"]), dof).coefficients
            after = schmidt_per_dof(rotated, (["a"], ["b"]), dof).coefficients
            assert after == pytest.approx(before, abs=1e-9)
            assert sum(c * c for c in after) == pytest.approx(1, abs=1e-10)


class TestClosedForms:
    def test_reference_point(self, ref_params):
        cf = closed_forms(ref_params)
        assert (cf.p0, cf.p1, cf.p2) == pytest.approx((0.0384, 0.1536, 0.192), abs=1e-12)
        assert (cf.f0, cf.f1, cf.f2) == pytest.approx((0.1536, 0.416, 0.1536), abs=1e-12)

    def test_symmetric_point(self, sym_params):
        cf = closed_forms(sym_params)
        assert (cf.p0, cf.p1, cf.p2) == pytest.approx((1 / 16, 1 / 4, 1 / 2))
        assert (cf.f0, cf.f1, cf.f2) == pytest.approx((1 / 16, 1 / 4, 1 / 4))

    @given(state_params(complex_phases=True))
    def test_relations(self, params):
        cf = closed_forms(params)
        assert cf.p1 == pytest.approx(4 * cf.p0) and cf.f2 == pytest.approx(cf.p1)
        assert all(0 <= v <= 1 for v in cf.to_dict().values())
        assert np.isclose(cf.p2, 4 * (abs(params.beta * params.delta * params.eta)) ** 2)
