import numpy as np
import pytest

from susyinv import timefunc as tf
from susyinv.construction import run_prescription, spin_supersystem
from susyinv.dynamics import (EigenvalueCrossingError, NonClosedLoopError,
                              StepSizeError, berry_holonomy, intertwining_residual,
                              lvn_residual, projected_schrodinger, propagate,
                              propagate_unitary)
from susyinv.operators import Operator, eigh
from susyinv.representations import make_spin


def grid(T, dt):
    return np.linspace(0.0, T, int(round(T / dt)) + 1)


@pytest.fixture(scope="module")
def precessing():
    spin = make_spin(0.5)
    system = spin_supersystem(spin, tf.const(np.pi / 4), tf.linear(2.0),
                              tf.const(0.5), b=1.0)
    return spin, run_prescription(system)


class TestPropagate:
    def test_constant_dipole_phases(self):
        # H = b J3 on |j,m>: psi(t) = e^{-i b t m} |j,m>.
        spin = make_spin(1)
        b = 1.7
        h = Operator(b * spin.J3.entries)
        times = grid(2.0, 1e-3)
        for m in (1.0, 0.0, -1.0):
            traj = propagate(lambda t: h, spin.basis_state(m), times)
            expected = np.exp(-1j * b * times[-1] * m) * spin.basis_state(m)
            assert abs(np.vdot(expected, traj.states[-1])) > 1 - 1e-12

    def test_zero_hamiltonian(self):
        spin = make_spin(0.5)
        h = Operator(np.zeros((2, 2)))
        traj = propagate(lambda t: h, spin.basis_state(0.5), grid(1.0, 0.01))
        assert np.array_equal(traj.states[-1], traj.states[0])

    def test_norm_drift_small(self, precessing):
        _, out = precessing
        psi0 = out.mapped_solution(0, 0.0)
        traj = propagate(out.h_minus, psi0, grid(5.0, 1e-3))
        assert traj.norm_drift.max() < 1e-9

    def test_against_closed_form_evolution(self, precessing):
        _, out = precessing
        times = grid(5.0, 1e-3)
        psi_ref = np.array([1.0, 1.0]) / np.sqrt(2)
        psi0 = out.u_minus(0.0).entries @ psi_ref
        traj = propagate(out.h_minus, psi0, times)
        closed = out.u_minus(times[-1]).entries @ psi_ref
        assert abs(np.vdot(closed, traj.states[-1])) >= 1 - 1e-8

    def test_second_order_convergence(self, precessing):
        _, out = precessing
        psi_ref = np.array([1.0, 1.0]) / np.sqrt(2)
        psi0 = out.u_minus(0.0).entries @ psi_ref

        def infidelity(dt):
            times = grid(4.0, dt)
            traj = propagate(out.h_minus, psi0, times)
            closed = out.u_minus(times[-1]).entries @ psi_ref
            return 1 - abs(np.vdot(closed, traj.states[-1]))

        assert infidelity(0.02) / infidelity(0.01) >= 3.5

    def test_step_size_rejected_with_suggestion(self):
        spin = make_spin(0.5)
        h = Operator(100.0 * spin.J3.entries)
        with pytest.raises(StepSizeError) as err:
            propagate(lambda t: h, spin.basis_state(0.5), grid(1.0, 0.1))
        assert err.value.suggested_dt < 0.01

    def test_unnormalized_state_rejected(self):
        spin = make_spin(0.5)
        with pytest.raises(ValueError):
            propagate(lambda t: spin.J3, 2.0 * spin.basis_state(0.5), grid(1.0, 0.01))

    def test_unitary_propagation(self, precessing):
        # Per-step unitarity is rounding-level; drift compounds over 3000 steps.
        _, out = precessing
        traj = propagate_unitary(out.h_minus, 2, grid(3.0, 1e-3))
        assert traj.unitarity_defect.max() < 1e-10
        assert np.diff(traj.unitarity_defect).max() < 1e-13
        closed = out.u_minus(3.0).entries @ out.u_minus(0.0).entries.conj().T
        overlap = abs(np.trace(closed.conj().T @ traj.operators[-1])) / 2
        assert overlap > 1 - 1e-8


class TestLvnResidual:
    def test_commuting_constants_vanish(self):
        spin = make_spin(1)
        i_map = lambda t: spin.J3
        h_map = lambda t: Operator(spin.J3.entries * 2.0)
        assert lvn_residual(i_map, h_map, 1.0) < 1e-12

    def test_prescription_invariant(self, precessing):
        _, out = precessing
        worst = max(lvn_residual(out.i_minus, out.h_minus, t)
                    for t in np.arange(0.0, 10.01, 0.5))
        assert worst < 1e-6

    def test_mismatched_hamiltonian_detected(self, precessing):
        # Negative control: same invariant against the plus-sector Hamiltonian.
        _, out = precessing
        res = lvn_residual(out.i_minus, out.system.h_plus, 1.0)
        assert res > 0.1

    def test_exact_derivative_hook(self, precessing):
        _, out = precessing
        t, h = 1.3, 1e-5
        i_dot = (out.i_minus(t + h).entries - out.i_minus(t - h).entries) / (2 * h)
        res = lvn_residual(out.i_minus, out.h_minus, t, i_dot=i_dot)
        assert res < 1e-6


class TestIntertwining:
    def test_prescription_violates_while_invariant_holds(self, precessing):
        # The generality gap: Y+ = 0 but Y- d0 != 0.
        _, out = precessing
        res = intertwining_residual(out.d, out.system.h_plus, out.h_minus, 1.0)
        assert res > 0.1
        assert lvn_residual(out.i_minus, out.h_minus, 1.0) < 1e-6

    def test_residual_equals_y_d0_norm(self, precessing):
        # Unitaries preserve Frobenius: residual = ||Y-(t) d0|| for Y+ = 0.
        _, out = precessing
        expected = np.linalg.norm(out.system.y_minus.value(1.0).entries
                                  @ out.system.d0.entries)
        res = intertwining_residual(out.d, out.system.h_plus, out.h_minus, 1.0)
        assert res == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(0.25)

    def test_zero_y_satisfies_intertwining(self):
        spin = make_spin(0.5)
        out = run_prescription(spin_supersystem(
            spin, tf.parse("0.3*sin(t)"), tf.parse("0.7*t"), tf.const(0.0)))
        res = intertwining_residual(out.d, out.system.h_plus, out.h_minus, 1.0)
        assert res < 1e-6

    def test_constant_commuting_case(self):
        spin = make_spin(1)
        d_map = lambda t: spin.J3
        h_map = lambda t: Operator(1.3 * spin.J3.entries)
        assert intertwining_residual(d_map, h_map, h_map, 0.7) < 1e-12


class TestProjectedSchrodinger:
    def test_constant_frame_pure_dynamical_phase(self):
        spin = make_spin(0.5)
        h = Operator(np.diag([1.5, -0.5]).astype(complex))
        i_map = lambda t: Operator(np.diag([0.0, 1.0]).astype(complex))
        times = grid(2.0, 1e-3)
        level = projected_schrodinger(i_map, lambda t: h, 1, times)
        assert level.degeneracy == 1
        # Tracked level is the lambda = 1 eigenvector e_0... value sorts last.
        assert level.value == pytest.approx(1.0)
        u_final = level.u[-1][0, 0]
        assert abs(u_final) == pytest.approx(1.0, abs=1e-8)

    def test_reconstruction_matches_mapped_solution(self, precessing):
        _, out = precessing
        times = grid(3.0, 1e-3)
        level = projected_schrodinger(out.i_minus, out.h_minus, 1, times)
        assert level.unitarity_defect() < 1e-8
        sol = level.solution(0)
        mapped = out.mapped_solution(0, times[-1])
        assert abs(np.vdot(mapped, sol[-1])) > 1 - 1e-6

    def test_abelian_level_is_phase(self, precessing):
        _, out = precessing
        level = projected_schrodinger(out.i_minus, out.h_minus, 1, grid(1.0, 1e-3))
        assert np.allclose(np.abs(level.u[:, 0, 0]), 1.0, atol=1e-10)

    def test_crossing_rejected(self):
        # Degeneracy pattern changes at t = 0.5 (a level splits off).
        def i_map(t):
            return Operator(np.diag([1.0, 1.0 + max(0.0, t - 0.5)]).astype(complex))

        h = Operator(np.zeros((2, 2)))
        with pytest.raises(EigenvalueCrossingError) as err:
            projected_schrodinger(i_map, lambda t: h, 0, grid(1.0, 0.05))
        assert 0.3 < err.value.t < 0.7


class TestBerryHolonomy:
    def test_constant_frame_identity(self):
        v = np.eye(4)[:, :2]
        res = berry_holonomy(lambda s: v, 100)
        assert np.linalg.norm(res.gamma - np.eye(2)) < 1e-12

    def test_spin_half_loop_phase(self):
        # Closed-form oracle: Gamma = exp(-i pi (1 - cos theta)) for the
        # positive level of the transported invariant frame; cross-checked
        # at 10x resolution.
        theta0 = np.pi / 3
        spin = make_spin(0.5)
        out = run_prescription(spin_supersystem(
            spin, tf.const(theta0), tf.linear(2 * np.pi), tf.const(0.5)))
        es0 = eigh(out.iminus_ref)
        v0 = es0.vectors[:, list(es0.degeneracy_groups[1])]
        frame = lambda s: out.system.w_minus.value(s).entries @ v0
        res = berry_holonomy(frame, 400)
        fine = berry_holonomy(frame, 4000)
        expected = np.exp(-1j * np.pi * (1 - np.cos(theta0)))
        assert abs(res.gamma[0, 0] - expected) < 1e-4
        assert abs(fine.gamma[0, 0] - expected) < 1e-6
        assert abs(abs(res.gamma[0, 0]) - 1.0) < 1e-10

    def test_reversed_loop_conjugates(self):
        spin = make_spin(1)
        out = run_prescription(spin_supersystem(
            spin, tf.const(np.pi / 3), tf.linear(2 * np.pi), tf.const(0.5)))
        es0 = eigh(out.iminus_ref)
        v0 = es0.vectors[:, list(es0.degeneracy_groups[-1])]
        frame = lambda s: out.system.w_minus.value(s).entries @ v0
        reverse = lambda s: frame(1.0 - s)
        forward = berry_holonomy(frame, 800).gamma
        backward = berry_holonomy(reverse, 800).gamma
        assert np.linalg.norm(backward - forward.conj().T) < 1e-8

    def test_gauge_covariance(self):
        # |lam,a> -> sum_b g_ba |lam,b> with constant unitary g: Gamma -> g^dag Gamma g.
        spin = make_spin(1)
        out = run_prescription(spin_supersystem(
            spin, tf.const(np.pi / 3), tf.linear(2 * np.pi), tf.const(0.5)))
        es0 = eigh(out.iminus_ref)
        v0 = es0.vectors[:, list(es0.degeneracy_groups[-1])]
        frame = lambda s: out.system.w_minus.value(s).entries @ v0
        rng = np.random.default_rng(2)
        g = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
        rotated = lambda s: frame(s) @ g
        base = berry_holonomy(frame, 600).gamma
        got = berry_holonomy(rotated, 600).gamma
        assert np.linalg.norm(got - g.conj().T @ base @ g) < 1e-8
        assert np.allclose(np.sort(np.angle(np.linalg.eigvals(got))),
                           np.sort(np.angle(np.linalg.eigvals(base))), atol=1e-8)

    def test_open_path_rejected(self):
        spin = make_spin(0.5)
        w = run_prescription(spin_supersystem(
            spin, tf.const(0.4), tf.linear(1.0), tf.const(0.0))).system.w_minus
        v0 = np.eye(2)[:, :1]
        frame = lambda s: w.value(s).entries @ v0  # phi ends at 1 rad, not 2 pi
        with pytest.raises(NonClosedLoopError):
            berry_holonomy(frame, 100)


def test_transport_via_numeric_propagation(precessing):
    # Independent route: conjugate I(0) with the numerically propagated U.
    _, out = precessing
    times = grid(3.0, 1e-3)
    traj = propagate_unitary(out.h_minus, 2, times)
    i0 = out.i_minus(0.0).entries
    for k in (len(times) // 2, len(times) - 1):
        u = traj.operators[k]
        diff = u @ i0 @ u.conj().T - out.i_minus(times[k]).entries
        assert np.linalg.norm(diff) < 1e-6
