import numpy as np
import pytest
import scipy.linalg as sla

from cred.errors import ClassificationError, ConfigurationError
from cred.grid import AttackProfile, DroopSchedule, build_state_space
from cred.simulate import Trajectory, classify_trajectory, simulate
from cred.stability import eigen_decompose, is_stable

from oracles import random_system_model


def _ss(model, gain=0.0, droop=0.0):
    n = model.areas
    g = np.zeros(n)
    d = np.zeros(n)
    g[0], d[0] = gain, droop
    return build_state_space(
        model,
        AttackProfile(g, np.zeros(n), (0,) if gain > 0 else ()),
        DroopSchedule(d, np.zeros(n)),
    )


class TestSimulate:
    def test_decay_envelope_matches_closed_form(self, one_area_model):
        ss = _ss(one_area_model)
        traj = simulate(ss, np.array([1.0]), t_step=1.0, t_end=25.0, dt=0.01)
        assert not traj.diverged
        mask = traj.times >= traj.step_time
        e = np.abs(traj.omega[mask, 0])
        t = traj.times[mask]
        interior = e[1:-1]
        peaks = np.flatnonzero((interior > e[:-2]) & (interior >= e[2:])) + 1
        slope = np.polyfit(t[peaks], np.log(e[peaks]), 1)[0]
        assert slope == pytest.approx(-1.0, rel=0.05)

    def test_zero_disturbance_stays_at_equilibrium(self, one_area_model):
        ss = _ss(one_area_model)
        traj = simulate(ss, np.array([0.0]), t_step=1.0, t_end=5.0, dt=0.01)
        assert np.max(np.abs(traj.states - traj.states[0])) <= 1e-12

    def test_unstable_attack_diverges(self, one_area_model):
        # gain 3 flips the damping to -1: envelope grows like exp(t/2)
        ss = _ss(one_area_model, gain=3.0)
        traj = simulate(ss, np.array([5.0]), t_step=1.0, t_end=30.0, dt=0.01)
        assert traj.diverged
        assert traj.times[-1] < 30.0
        assert classify_trajectory(traj) == "growing"

    def test_unstable_envelope_growth_rate(self, one_area_model):
        ss = _ss(one_area_model, gain=3.0)
        traj = simulate(ss, np.array([1.0]), t_step=1.0, t_end=20.0, dt=0.01)
        mask = traj.times >= traj.step_time
        e = np.abs(traj.omega[mask, 0])
        t = traj.times[mask]
        interior = e[1:-1]
        peaks = np.flatnonzero((interior > e[:-2]) & (interior >= e[2:])) + 1
        slope = np.polyfit(t[peaks], np.log(e[peaks]), 1)[0]
        assert slope == pytest.approx(0.5, rel=0.05)

    def test_rk4_convergence_against_matrix_exponential(self, one_area_model):
        ss = _ss(one_area_model)
        step = np.array([1.0])
        t_end = 5.0

        def end_state(dt):
            return simulate(ss, step, t_step=0.0, t_end=t_end, dt=dt).states[-1]

        x_eq = np.linalg.solve(ss.state_matrix, -(ss.forcing + np.array([0.0, -1.0])))
        x0 = np.linalg.solve(ss.state_matrix, -ss.forcing)
        exact = x_eq + sla.expm(ss.state_matrix * t_end) @ (x0 - x_eq)
        err_coarse = np.linalg.norm(end_state(0.02) - exact)
        err_fine = np.linalg.norm(end_state(0.01) - exact)
        assert err_coarse / err_fine >= 8.0

    def test_resolution_guard(self, one_area_model):
        ss = _ss(one_area_model)
        with pytest.raises(ConfigurationError):
            simulate(ss, np.array([1.0]), t_step=1.0, t_end=10.0, dt=0.1)

    def test_bad_horizon(self, one_area_model):
        ss = _ss(one_area_model)
        with pytest.raises(ConfigurationError):
            simulate(ss, np.array([1.0]), t_step=5.0, t_end=4.0, dt=0.01)

    def test_deviation_norm_monotone_after_last_peak(self, one_area_model):
        ss = _ss(one_area_model)
        traj = simulate(ss, np.array([1.0]), t_step=1.0, t_end=30.0, dt=0.01)
        e = np.linalg.norm(traj.states - traj.equilibrium_post, axis=1)
        interior = e[1:-1]
        peaks = np.flatnonzero((interior > e[:-2]) & (interior >= e[2:])) + 1
        tail = e[peaks[-1]:]
        assert np.all(np.diff(tail) <= 1e-12)


class TestClassify:
    def test_synthetic_decaying_signal(self):
        t = np.arange(0.0, 20.0, 0.01)
        omega = np.exp(-0.5 * t) * np.sin(2.0 * t)
        states = np.column_stack([np.zeros_like(t), omega])
        traj = Trajectory(
            times=t, states=states, disturbance={}, step_time=0.0,
            equilibrium_post=np.zeros(2), diverged=False,
        )
        assert classify_trajectory(traj) == "decaying"

    def test_diverged_flag_shortcut(self):
        traj = Trajectory(
            times=np.array([0.0, 0.01]), states=np.zeros((2, 2)), disturbance={},
            step_time=0.0, equilibrium_post=np.zeros(2), diverged=True,
        )
        assert classify_trajectory(traj) == "growing"

    def test_overdamped_trace_rejected(self, one_area_model):
        # heavy proportional action: both eigenvalues real, no peaks to fit
        from cred.grid import SystemModel

        model = SystemModel(
            areas=1, inertia_sg=[1.0], inertia_ibr=[0.0], damping=[0.0],
            gov_integral=[5.0], gov_proportional=[10.0], susceptance=[[0.0]],
            secure_load=[7.0], vulnerable_load=[3.0], ibr_max_power=[4.0],
            omega_max=0.5,
        )
        traj = simulate(_ss(model), np.array([1.0]), t_step=1.0, t_end=20.0, dt=0.005)
        with pytest.raises(ClassificationError):
            classify_trajectory(traj)

    def test_agrees_with_eigen_verdict(self, rng):
        agreed = 0
        attempts = 0
        while agreed < 50 and attempts < 400:
            attempts += 1
            model = random_system_model(rng)
            worst = model.vulnerable_load[0] / (2.0 * model.omega_max)
            gain = rng.uniform(0.0, 3.0 * (model.gov_proportional[0] + worst))
            ss = _ss(model, gain=gain)
            eig = eigen_decompose(ss)
            verdict = is_stable(eig)
            dominant = eig.eigenvalues[np.argmax(eig.eigenvalues.real)]
            if abs(verdict.max_real) <= 0.02 or abs(dominant.imag) < 0.3:
                continue
            period = 2.0 * np.pi / abs(dominant.imag)
            lam_max = float(np.abs(eig.eigenvalues).max())
            dt = min(0.01, 1.0 / (12.0 * lam_max))
            t_end = 1.0 + 12.0 * period
            traj = simulate(ss, 0.01 * model.secure_load, t_step=1.0,
                            t_end=t_end, dt=dt)
            try:
                label = classify_trajectory(traj)
            except ClassificationError:
                continue
            if label == "marginal":
                continue
            assert (label == "decaying") == verdict.stable
            agreed += 1
        assert agreed >= 50
