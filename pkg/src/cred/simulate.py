"""Time-domain integration of the closed loop and trajectory classification.

Classic fixed-step RK4 on xdot = S x + f, starting from the pre-step
equilibrium, with a load step added to the forcing at a chosen time.  A
trajectory whose state norm passes 1e6 is cut short and flagged diverged
rather than treated as an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, ConfigurationError
from .grid import StateSpace

__all__ = ["Trajectory", "simulate", "classify_trajectory"]

DIVERGENCE_NORM = 1e6

#: |log-amplitude slope| below this is called marginal (1/s)
CLASSIFY_TOL = 0.01


@dataclass(frozen=True, eq=False)
class Trajectory:
    """State history on a uniform time grid.

    states[k] holds [angles, frequency deviations] at times[k]; the
    trajectory ends early (diverged=True) if the state norm blows up.
    """

    times: np.ndarray
    states: np.ndarray
    disturbance: dict
    step_time: float
    equilibrium_post: np.ndarray
    diverged: bool

    @property
    def n_areas(self) -> int:
        return self.states.shape[1] // 2

    @property
    def omega(self) -> np.ndarray:
        return self.states[:, self.n_areas:]

    @property
    def delta(self) -> np.ndarray:
        return self.states[:, : self.n_areas]


def _equilibrium(ss: StateSpace, forcing: np.ndarray) -> np.ndarray:
    return np.linalg.solve(ss.state_matrix, -forcing)


def simulate(
    ss: StateSpace,
    disturbance: np.ndarray,
    t_step: float = 1.0,
    t_end: float = 30.0,
    dt: float = 0.01,
) -> Trajectory:
    """Integrate the step response of the closed loop.

    disturbance is the per-area load step (p.u.), applied to the forcing
    from the first grid time at or after t_step.  dt must resolve the
    fastest mode: dt <= 1/(10 max|lambda|).
    """
    n = ss.n_areas
    disturbance = np.asarray(disturbance, dtype=float)
    if disturbance.shape != (n,):
        raise ConfigurationError(f"disturbance must have shape ({n},)")
    if t_end <= t_step:
        raise ConfigurationError("t_end must exceed t_step")
    lam_max = float(np.abs(np.linalg.eigvals(ss.state_matrix)).max())
    if lam_max > 0.0 and dt > 1.0 / (10.0 * lam_max):
        raise ConfigurationError(
            f"dt={dt:g} too coarse for fastest mode |lambda|={lam_max:g}; "
            f"need dt <= {1.0 / (10.0 * lam_max):g}"
        )

    m_diag = -np.diag(ss.descriptor_a)[n:]
    extra = np.concatenate([np.zeros(n), -disturbance / m_diag])
    f_pre = ss.forcing
    f_post = ss.forcing + extra

    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    k_switch = int(np.ceil(t_step / dt - 1e-12))

    s = ss.state_matrix
    x = _equilibrium(ss, f_pre)
    states = np.empty((n_steps + 1, 2 * n))
    states[0] = x
    diverged = False
    last = n_steps
    for k in range(n_steps):
        f = f_post if k >= k_switch else f_pre
        k1 = s @ x + f
        k2 = s @ (x + 0.5 * dt * k1) + f
        k3 = s @ (x + 0.5 * dt * k2) + f
        k4 = s @ (x + dt * k3) + f
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[k + 1] = x
        if np.abs(x).max() > DIVERGENCE_NORM:
            diverged = True
            last = k + 1
            break

    times = times[: last + 1]
    states = states[: last + 1]
    eq_post = _equilibrium(ss, f_post)
    for arr in (times, states, eq_post):
        arr.setflags(write=False)
    return Trajectory(
        times=times,
        states=states,
        disturbance={"step": disturbance.tolist(), "t_step": float(k_switch * dt)},
        step_time=float(k_switch * dt),
        equilibrium_post=eq_post,
        diverged=diverged,
    )


def classify_trajectory(traj: Trajectory, area: int | None = None) -> str:
    """Label the post-step oscillation as decaying, growing, or marginal.

    Fits a line to the log of the rectified frequency-deviation peaks of
    one area (the one with the largest swing unless given) and compares
    the slope against CLASSIFY_TOL.  A diverged trajectory is growing by
    definition.  Raises ClassificationError when fewer than four peaks are
    available.
    """
    if traj.diverged:
        return "growing"
    mask = traj.times >= traj.step_time
    omega = traj.omega[mask] - traj.equilibrium_post[traj.n_areas:]
    times = traj.times[mask]
    if area is None:
        area = int(np.argmax(np.abs(omega).max(axis=0)))
    signal = np.abs(omega[:, area])
    floor = max(signal.max() * 1e-9, 1e-300)

    interior = signal[1:-1]
    peak_idx = np.flatnonzero(
        (interior > signal[:-2]) & (interior >= signal[2:]) & (interior > floor)
    ) + 1
    if peak_idx.size < 4:
        raise ClassificationError(
            f"only {peak_idx.size} usable oscillation peaks; cannot classify"
        )
    slope = np.polyfit(times[peak_idx], np.log(signal[peak_idx]), 1)[0]
    if slope > CLASSIFY_TOL:
        return "growing"
    if slope < -CLASSIFY_TOL:
        return "decaying"
    return "marginal"
