from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import serirs, serirs_params, sverirs, sverirs_params
from epidyn.model import NumericalError
from epidyn.reproduction import (
    NextGenPair,
    build_nextgen_serirs,
    build_nextgen_sverirs,
    critical_phi,
    herd_threshold,
    next_generation_r0,
    r0,
    r0_serirs,
    r0_sverirs,
    threshold_side,
)

# (1.1/7)/(3/14) * (beta*7) with beta = 2/5, 1/5, 19/100
R0_EXAMPLES = {0.4: Fr(154, 75), 0.2: Fr(77, 75), 0.19: Fr(1463, 1500)}


class TestClosedForms:
    @pytest.mark.parametrize("beta, reported", [(0.4, 2.053), (0.2, 1.027), (0.19, 0.975)])
    def test_serirs_examples(self, beta, reported):
        got = r0_serirs(serirs(beta))
        assert got == pytest.approx(float(R0_EXAMPLES[beta]), rel=1e-14)
        assert abs(got - reported) <= 1e-3

    def test_sverirs_examples(self, vax_no_endemic, vax_endemic):
        assert abs(r0_sverirs(vax_no_endemic) - 0.719) <= 1e-3
        assert abs(r0_sverirs(vax_endemic) - 3.23) <= 1e-2

    def test_classical_seir_limit(self):
        p = serirs(0.3, alpha=0.0, delta=0.0)
        assert r0_serirs(p) == pytest.approx(0.3 / p.gamma, rel=1e-15)

    def test_useless_vaccine(self):
        p = sverirs(0.9, rho=1.0, phi=0.3)
        assert r0_sverirs(p) == pytest.approx(r0_serirs(p.base), rel=1e-15)

    def test_dispatch(self, ex1, vax_endemic):
        assert r0(ex1) == r0_serirs(ex1)
        assert r0(vax_endemic) == r0_sverirs(vax_endemic)

    def test_threshold_side(self):
        assert threshold_side(1.5) == "above"
        assert threshold_side(0.5) == "below"
        assert threshold_side(1.0 + 1e-13) == "threshold"


class TestNextGeneration:
    def test_matrices_example1(self, ex1):
        pair = build_nextgen_serirs(ex1)
        np.testing.assert_allclose(pair.F, [[0.04, 0.4], [0, 0]], atol=1e-16)
        np.testing.assert_allclose(pair.V, [[3 / 14, 0], [-1 / 7, 1 / 7]], atol=1e-16)
        assert np.linalg.det(pair.V) == pytest.approx(ex1.gamma * (ex1.sigma + ex1.delta), rel=1e-14)
        assert abs(next_generation_r0(pair) - 2.053) <= 1e-3

    def test_zero_transmission(self):
        pair = build_nextgen_serirs(serirs(0.0))
        assert not pair.F.any()
        assert next_generation_r0(pair) == 0.0

    def test_sverirs_pair(self, vax_endemic):
        assert abs(next_generation_r0(build_nextgen_sverirs(vax_endemic)) - 3.23) <= 1e-2
        useless = vax_endemic.replace(rho=1.0)
        np.testing.assert_allclose(build_nextgen_sverirs(useless).F, build_nextgen_serirs(useless.base).F,
                                   rtol=1e-15)

    def test_perfect_vaccine_limit(self):
        p = sverirs(0.9, rho=0.0, phi=1e6)
        assert next_generation_r0(build_nextgen_sverirs(p)) < 1e-6

    def test_singular_transition(self):
        with pytest.raises(NumericalError, match="transition matrix singular"):
            next_generation_r0(NextGenPair(np.eye(2), np.zeros((2, 2))))

    @settings(max_examples=1000)
    @given(serirs_params())
    def test_agrees_with_closed_form_serirs(self, p):
        assert next_generation_r0(build_nextgen_serirs(p)) == pytest.approx(r0_serirs(p), rel=1e-10, abs=1e-12)

    @settings(max_examples=1000)
    @given(sverirs_params())
    def test_agrees_with_closed_form_sverirs(self, p):
        assert next_generation_r0(build_nextgen_sverirs(p)) == pytest.approx(r0_sverirs(p), rel=1e-10, abs=1e-12)


class TestInvariants:
    @given(sverirs_params(n=100.0))
    def test_population_invariance(self, p):
        vals = {r0(p.replace(n=n)) for n in (1.0, 100.0, 1e6)}
        assert len(vals) == 1

    @given(sverirs_params(), st.lists(st.floats(1e-5, 1.0), min_size=2, max_size=12, unique=True))
    def test_decreasing_in_phi(self, p, phis):
        phis = sorted(phis)
        phis = [f for i, f in enumerate(phis) if i == 0 or f > phis[i - 1] * (1 + 1e-6)]
        vals = [r0(p.replace(phi=f)) for f in phis]
        # near rho = 1, or with R0 in the subnormal range, the decrease is below double resolution
        if p.rho <= 0.999 and vals[-1] > 1e-290:
            assert all(b < a for a, b in zip(vals, vals[1:]))
        if p.rho == 1.0:
            assert len(set(vals)) == 1

    def test_constant_in_phi_for_useless_vaccine(self):
        p = sverirs(0.9, rho=1.0)
        vals = [r0(p.replace(phi=f)) for f in np.geomspace(1e-5, 10, 20)]
        assert max(vals) - min(vals) <= 1e-15 * max(vals)

    @settings(max_examples=500)
    @given(sverirs_params())
    def test_root_property(self, p):
        crit = critical_phi(p)
        if crit:
            assert r0(p.replace(phi=crit.phi)) == pytest.approx(1.0, abs=1e-10)


class TestHerdAndCriticalPhi:
    def test_herd_threshold(self):
        assert abs(herd_threshold(3.23) - 0.69) <= 5e-3
        assert herd_threshold(1.0) == 0.0
        assert herd_threshold(0.5) == -1.0
        with pytest.raises(ValueError):
            herd_threshold(0.0)

    def test_critical_phi_examples(self, vax_no_endemic, eradication):
        assert abs(critical_phi(vax_no_endemic).phi - 0.000165) <= 1e-6
        assert abs(critical_phi(eradication).phi - 1 / 282) <= 1e-5

    def test_boundary_and_absences(self):
        p = sverirs(0.2)
        at_one = p.replace(beta=p.gamma * (p.delta + p.sigma) / (p.alpha * p.gamma + p.sigma))
        assert critical_phi(at_one).phi == pytest.approx(0.0, abs=1e-12)
        low = critical_phi(sverirs(0.1))
        assert not low and "R0 < 1" in low.reason
        useless = critical_phi(sverirs(0.9, rho=1.0))
        assert useless.phi is None and useless.reason == "vaccine cannot reduce R0 below C"
        floor = critical_phi(sverirs(0.9, rho=0.5))
        assert floor.phi is None and "floor" in floor.reason
