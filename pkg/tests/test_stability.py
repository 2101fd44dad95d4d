import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import random_serirs, random_sverirs, serirs, serirs_params, sverirs, sverirs_params
from epidyn.equilibria import dfe, endemic, endemic_serirs, epsilon, primary_endemic
from epidyn.model import NumericalError, reduce_state, serirs_reduced_rhs, sverirs_reduced_rhs
from epidyn.reproduction import critical_phi, r0
from epidyn.stability import (
    CENTER_DEGENERATE,
    STABLE_NODE,
    STABLE_SPIRAL,
    UNSTABLE,
    bialternate_sum,
    classify,
    det_endemic_closed,
    dfe_eigs_closed_serirs,
    dfe_eigs_closed_sverirs,
    eigenvalues,
    fuller_criteria_3x3,
    jacobian_numeric,
    jacobian_serirs_dfe,
    jacobian_serirs_endemic,
    jacobian_sverirs_dfe,
    report,
    stability_at,
    sverirs_dfe_Z,
)
from epidyn.reproduction import r0_serirs


def sorted_eigs(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def bialternate_display(p):
    """The 3x3 bialternate sum written out entry by entry for the endemic matrix."""
    R0 = r0_serirs(p)
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    e = epsilon(p) * w * (d + s)
    return np.array([
        [-e - w - b * s / (g * R0), b / R0, b / R0 + w],
        [s, -e - w - g, -a * b / R0 - w],
        [0.0, e, -b * s / (g * R0) - g],
    ])


class TestSerirsEndemic:
    def test_example1_spectrum(self, ex1):
        ev = sorted_eigs(eigenvalues(jacobian_serirs_endemic(ex1)))
        np.testing.assert_allclose(ev.real, [-0.340, -0.010, -0.010], atol=1e-3)
        np.testing.assert_allclose(ev.imag, [0.0, -0.031, 0.031], atol=1e-3)
        assert classify(ev) == STABLE_SPIRAL

    def test_independent_of_n(self, ex1):
        ms = [jacobian_serirs_endemic(ex1.replace(n=n)) for n in (1.0, 100.0, 1e6)]
        assert all(np.array_equal(ms[0], m) for m in ms[1:])

    def test_det_vanishes_at_threshold(self, ex1):
        b1 = ex1.gamma * (ex1.delta + ex1.sigma) / (ex1.alpha * ex1.gamma + ex1.sigma)
        p = ex1.replace(beta=b1 * (1 + 1e-9))
        assert abs(np.linalg.det(jacobian_serirs_endemic(p))) < 1e-12

    def test_bialternate_matches_display(self, ex1):
        np.testing.assert_allclose(bialternate_sum(jacobian_serirs_endemic(ex1)), bialternate_display(ex1),
                                   rtol=0, atol=1e-12)

    def test_fuller_example1(self, ex1):
        rec = fuller_criteria_3x3(jacobian_serirs_endemic(ex1))
        assert rec.det_negative and rec.trace_negative and rec.det_bialternate_negative and rec.stable

    @settings(max_examples=300)
    @given(serirs_params())
    def test_det_identity(self, p):
        assume(abs(r0(p) - 1) > 1e-6 and r0(p) > 1e-3)
        got = np.linalg.det(jacobian_serirs_endemic(p))
        want = det_endemic_closed(p)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-300)
        assert want == pytest.approx(-p.omega * p.gamma * (p.delta + p.sigma) * (r0(p) - 1), rel=1e-10)

    def test_printed_det_factor_only_holds_when_delta_equals_omega(self, ex1):
        def printed(q):
            return -epsilon(q) * q.omega * (q.delta + q.sigma) * (
                q.sigma * q.delta + q.gamma * (q.delta + q.sigma + q.omega))
        assert printed(ex1) != pytest.approx(np.linalg.det(jacobian_serirs_endemic(ex1)), rel=1e-3)
        q = ex1.replace(delta=ex1.omega)
        assert printed(q) == pytest.approx(np.linalg.det(jacobian_serirs_endemic(q)), rel=1e-10)

    @settings(max_examples=300)
    @given(serirs_params())
    def test_bialternate_display_general(self, p):
        assume(abs(r0(p) - 1) > 1e-6 and r0(p) > 1e-3)
        G = bialternate_sum(jacobian_serirs_endemic(p))
        np.testing.assert_allclose(G, bialternate_display(p), rtol=1e-12, atol=1e-12 * np.abs(G).max())


class TestSerirsDfe:
    def test_example3_spectrum(self, ex3):
        ev = sorted_eigs(eigenvalues(jacobian_serirs_dfe(ex3)))
        np.testing.assert_allclose(ev.real, [-0.336, -0.011, -0.002], atol=1e-3)
        assert np.all(ev.imag == 0)
        assert classify(ev) == STABLE_NODE
        np.testing.assert_allclose(np.sort(dfe_eigs_closed_serirs(ex3)), ev.real, rtol=0, atol=1e-10)

    def test_example1_one_positive(self, ex1):
        ev = eigenvalues(jacobian_serirs_dfe(ex1))
        assert np.sum(ev.real > 0) == 1
        assert not fuller_criteria_3x3(jacobian_serirs_dfe(ex1)).stable

    def test_singular_at_threshold(self, ex1):
        b1 = ex1.gamma * (ex1.delta + ex1.sigma) / (ex1.alpha * ex1.gamma + ex1.sigma)
        assert abs(np.linalg.det(jacobian_serirs_dfe(ex1.replace(beta=b1)))) < 1e-10

    @settings(max_examples=500)
    @given(serirs_params())
    def test_closed_eigs_bounds(self, p):
        a, b, g, d, s = p.alpha, p.beta, p.gamma, p.delta, p.sigma
        assert 4 * b * s + (a * b + g - d - s) ** 2 >= 0
        l1, l2, l3 = dfe_eigs_closed_serirs(p)
        assert l1 == -p.omega
        assert l2 <= -g + 1e-12
        R0 = r0(p)
        if abs(R0 - 1) > 1e-6:
            assert np.sign(l3) == np.sign(R0 - 1)
        ev = np.sort(eigenvalues(jacobian_serirs_dfe(p)).real)
        np.testing.assert_allclose(np.sort([l1, l2, l3]), ev, rtol=1e-9, atol=1e-10)

    def test_seir_like_trichotomy(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            g = rng.uniform(0.05, 1.0)
            p = serirs(g * rng.uniform(0.5, 1.5), alpha=0.0, delta=0.0, gamma=g)
            assert np.sign(dfe_eigs_closed_serirs(p)[2]) == np.sign(r0(p) - 1)


class TestSverirsDfe:
    def test_no_endemic_real_negative(self, vax_no_endemic):
        ev = eigenvalues(jacobian_sverirs_dfe(vax_no_endemic))
        assert np.all(ev.imag == 0) and np.all(ev.real < 0)
        np.testing.assert_allclose(np.sort(dfe_eigs_closed_sverirs(vax_no_endemic)), np.sort(ev.real),
                                   rtol=0, atol=1e-9)

    def test_endemic_unstable(self, vax_endemic):
        assert np.any(eigenvalues(jacobian_sverirs_dfe(vax_endemic)).real > 0)

    def test_singular_at_critical_phi(self, vax_no_endemic):
        crit = critical_phi(vax_no_endemic).phi
        assert abs(np.linalg.det(jacobian_sverirs_dfe(vax_no_endemic.replace(phi=crit)))) < 1e-9

    @pytest.mark.parametrize("factor", [0.5, 0.9, 1.1, 2.0])
    def test_sign_of_l4_straddles_critical_phi(self, vax_no_endemic, factor):
        p = vax_no_endemic.replace(phi=critical_phi(vax_no_endemic).phi * factor)
        assert np.sign(dfe_eigs_closed_sverirs(p)[3]) == np.sign(r0(p) - 1)

    @settings(max_examples=500)
    @given(sverirs_params())
    def test_closed_eigs(self, p):
        # Z is a sum of squares plus 4 beta sigma (...) > 0, so zero only at beta = 0
        assert sverirs_dfe_Z(p) > 0 or (p.beta == 0 and sverirs_dfe_Z(p) >= 0)
        l = dfe_eigs_closed_sverirs(p)
        assert l[0] == -p.omega and l[1] == -p.phi - p.psi
        assert l[2] <= -p.gamma + 1e-12
        ev = np.sort(eigenvalues(jacobian_sverirs_dfe(p)).real)
        np.testing.assert_allclose(np.sort(l), ev, rtol=1e-9, atol=1e-9)

    def test_matches_numeric_jacobian(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            p = random_sverirs(rng)
            x = reduce_state(dfe(p).point)
            J = jacobian_numeric(lambda z: sverirs_reduced_rhs(z, p), x, 1e-5)
            assert np.max(np.abs(J - jacobian_sverirs_dfe(p))) <= 1e-6


class TestAnalyticVsNumeric:
    def test_example1(self, ex1):
        x = endemic_serirs(ex1).point[:3]
        J = jacobian_numeric(lambda z: serirs_reduced_rhs(z, ex1), x, 1e-5)
        assert np.max(np.abs(J - jacobian_serirs_endemic(ex1))) <= 1e-6

    def test_randomized(self):
        rng = np.random.default_rng(5)
        done = 0
        while done < 200:
            p = random_serirs(rng)
            if abs(r0(p) - 1) < 1e-6:
                continue
            x = endemic_serirs(p).point[:3]
            f = lambda z: serirs_reduced_rhs(z, p)
            assert np.max(np.abs(jacobian_numeric(f, x, 1e-5) - jacobian_serirs_endemic(p))) <= 1e-6
            assert np.max(np.abs(jacobian_numeric(f, [p.n, 0, 0], 1e-5) - jacobian_serirs_dfe(p))) <= 1e-6
            done += 1

    def test_linear_field(self):
        A = np.array([[1.0, 2.0, -3.0], [0.5, -1.0, 4.0], [2.0, 0.0, 1.0]])
        np.testing.assert_allclose(jacobian_numeric(lambda x: A @ x, np.ones(3), 1e-3), A, atol=1e-12)

    def test_vax_endemic_p3(self, vax_endemic):
        ev = stability_at(vax_endemic, primary_endemic(endemic(vax_endemic))).eigenvalues
        want = sorted_eigs([-0.345, -0.009, -0.020 + 0.053j, -0.020 - 0.053j])
        np.testing.assert_allclose(ev.real, want.real, atol=1e-3)
        np.testing.assert_allclose(ev.imag, want.imag, atol=1e-3)

    def test_nonfinite(self):
        with pytest.raises(NumericalError):
            jacobian_numeric(lambda x: x * np.nan, np.ones(2), 1e-3)
        with pytest.raises(ValueError):
            jacobian_numeric(lambda x: x, np.ones(2), 0.0)


class TestLinearAlgebra:
    def test_identity(self):
        np.testing.assert_allclose(eigenvalues(np.eye(3)), [1, 1, 1])

    def test_companion(self):
        # (x+1)(x+2)(x+3) = x^3 + 6x^2 + 11x + 6
        C = np.array([[0, 1, 0], [0, 0, 1], [-6, -11, -6]], dtype=float)
        np.testing.assert_allclose(np.sort(eigenvalues(C).real), [-3, -2, -1], atol=1e-10)

    def test_order_ceiling_and_shape(self):
        with pytest.raises(ValueError):
            eigenvalues(np.eye(17))
        with pytest.raises(ValueError):
            eigenvalues(np.ones((2, 3)))
        with pytest.raises(ValueError):
            eigenvalues(np.array([[np.nan]]))

    @settings(max_examples=200)
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_trace_and_det(self, k, seed):
        m = np.random.default_rng(seed).normal(size=(k, k))
        ev = eigenvalues(m)
        assert abs(ev.sum() - np.trace(m)) <= 1e-9 * np.linalg.norm(m)
        det = np.linalg.det(m)
        assert abs(np.prod(ev) - det) <= 1e-9 * max(abs(det), 1.0)

    def test_bialternate_diagonal(self):
        np.testing.assert_array_equal(bialternate_sum(np.diag([1.0, 2.0, 4.0])), np.diag([3.0, 5.0, 6.0]))

    @settings(max_examples=300)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_bialternate_spectrum(self, k, seed):
        m = np.random.default_rng(seed).normal(size=(k, k))
        ev = np.linalg.eigvals(m)
        pair_sums = sorted_eigs([ev[i] + ev[j] for i, j in itertools.combinations(range(k), 2)])
        got = sorted_eigs(np.linalg.eigvals(bialternate_sum(m)))
        # match as multisets: greedy nearest assignment
        remaining = list(pair_sums)
        for z in got:
            i = int(np.argmin([abs(z - w) for w in remaining]))
            assert abs(z - remaining.pop(i)) <= 1e-8 * max(1.0, np.abs(ev).max())

    def test_bialternate_rejects_scalar(self):
        with pytest.raises(ValueError):
            bialternate_sum(np.ones((1, 1)))

    def test_fuller_unstable_diagonal(self):
        rec = fuller_criteria_3x3(np.diag([1.0, -1.0, -2.0]))
        assert rec.det > 0 and not rec.stable
        with pytest.raises(ValueError):
            fuller_criteria_3x3(np.eye(4))

    @settings(max_examples=500)
    @given(st.integers(0, 2**32 - 1))
    def test_fuller_agrees_with_eigenvalues(self, seed):
        m = np.random.default_rng(seed).normal(size=(3, 3))
        rec = fuller_criteria_3x3(m)
        assume(min(abs(rec.det), abs(rec.trace), abs(rec.det_bialternate)) > 1e-10)
        assert rec.stable == (classify(np.linalg.eigvals(m)) in (STABLE_NODE, STABLE_SPIRAL))


class TestClassify:
    def test_cases(self):
        assert classify([-0.340, -0.010 + 0.031j, -0.010 - 0.031j]) == STABLE_SPIRAL
        assert classify([-0.336, -0.011, -0.002]) == STABLE_NODE
        assert classify([0.0, -1.0, -2.0]) == CENTER_DEGENERATE
        assert classify([1e-13, -1.0]) == CENTER_DEGENERATE
        assert classify([2e-12, -1.0]) == UNSTABLE

    def test_report_sorted(self, ex1):
        rep = report(jacobian_serirs_endemic(ex1))
        assert rep.criteria is not None
        assert list(rep.eigenvalues.real) == sorted(rep.eigenvalues.real)
        assert report(np.eye(4) * -1).criteria is None


class TestThresholdProperties:
    def test_singularity_iff_threshold_serirs(self, ex1):
        b1 = ex1.gamma * (ex1.delta + ex1.sigma) / (ex1.alpha * ex1.gamma + ex1.sigma)
        for beta in b1 * (1 + np.linspace(-1e-3, 1e-3, 201)):
            p = ex1.replace(beta=beta)
            d = abs(np.linalg.det(jacobian_serirs_dfe(p)))
            # det N = -w g (d + s)(1 - R0) exactly
            scale = p.omega * p.gamma * (p.delta + p.sigma)
            assert d == pytest.approx(scale * abs(1 - r0(p)), rel=1e-6, abs=1e-15)
            assert (d < 4.95e-4 * scale) == (abs(r0(p) - 1) < 4.95e-4)

    def test_singularity_iff_threshold_sverirs(self, vax_no_endemic):
        crit = critical_phi(vax_no_endemic).phi
        for phi in crit * (1 + np.linspace(-0.1, 0.1, 201)):
            p = vax_no_endemic.replace(phi=phi)
            d = abs(np.linalg.det(jacobian_sverirs_dfe(p)))
            l = dfe_eigs_closed_sverirs(p)
            scale = abs(np.prod(l[:3]))
            assert d == pytest.approx(scale * abs(l[3]), rel=1e-6, abs=1e-18)
            assert np.sign(l[3]) == np.sign(r0(p) - 1) or abs(r0(p) - 1) < 1e-12

    def test_endemic_threshold_property(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 500:
            p = random_serirs(rng)
            R0 = r0(p)
            if abs(R0 - 1) < 1e-6:
                continue
            free = stability_at(p, dfe(p)).classification
            eq = endemic_serirs(p)
            if R0 > 1:
                assert eq.relevant
                assert stability_at(p, eq).classification in (STABLE_NODE, STABLE_SPIRAL)
                assert free == UNSTABLE
                # det G < 0 (with det M < 0 and tr M < 0), sampled instead of expanded
                assert fuller_criteria_3x3(jacobian_serirs_endemic(p)).stable
            else:
                assert not eq.relevant
                assert free in (STABLE_NODE, STABLE_SPIRAL)
            checked += 1
