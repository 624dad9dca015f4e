"""Multi-area grid frequency dynamics under load attacks and inverter droop.

The closed loop is a descriptor system

    E xdot = B x + u,    x = [angle deviations; frequency deviations],

with E = blockdiag(I, -M), M the per-area inertia, and B carrying the
governor stiffness, the inter-area coupling in Laplacian form, and the net
damping  K_p + D - K_attack + K_droop.  All power quantities are per-unit on
a common base; frequency deviations are in Hz, so gains are p.u./Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "SystemModel",
    "AttackProfile",
    "DroopSchedule",
    "StateSpace",
    "build_state_space",
    "check_attack_budget",
    "check_droop_capacity",
]


def _vector(value, n: int, name: str, min_value=None, strict_min=None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ConfigurationError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    if min_value is not None and np.any(arr < min_value):
        raise ConfigurationError(f"{name} must be >= {min_value} elementwise")
    if strict_min is not None and np.any(arr <= strict_min):
        raise ConfigurationError(f"{name} must be > {strict_min} elementwise")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Per-area physical parameters of the multi-area system.

    inertia_sg/inertia_ibr: p.u.s/Hz, damping and governor gains: p.u./Hz,
    susceptance: symmetric coupling matrix with zero diagonal (p.u./rad),
    loads and IBR capacity: p.u., omega_max: largest tolerated frequency
    deviation (Hz).
    """

    areas: int
    inertia_sg: np.ndarray
    inertia_ibr: np.ndarray
    damping: np.ndarray
    gov_integral: np.ndarray
    gov_proportional: np.ndarray
    susceptance: np.ndarray
    secure_load: np.ndarray
    vulnerable_load: np.ndarray
    ibr_max_power: np.ndarray
    omega_max: float

    def __post_init__(self):
        n = int(self.areas)
        if n < 1:
            raise ConfigurationError("areas must be >= 1")
        object.__setattr__(self, "areas", n)
        set_ = object.__setattr__
        set_(self, "inertia_sg", _vector(self.inertia_sg, n, "inertia_sg", min_value=0.0))
        set_(self, "inertia_ibr", _vector(self.inertia_ibr, n, "inertia_ibr", min_value=0.0))
        if np.any(self.inertia_sg + self.inertia_ibr <= 0.0):
            raise ConfigurationError("total inertia must be > 0 in every area")
        set_(self, "damping", _vector(self.damping, n, "damping", min_value=0.0))
        set_(self, "gov_integral", _vector(self.gov_integral, n, "gov_integral", strict_min=0.0))
        set_(self, "gov_proportional", _vector(self.gov_proportional, n, "gov_proportional", min_value=0.0))
        sus = np.asarray(self.susceptance, dtype=float)
        if sus.shape != (n, n):
            raise ConfigurationError(f"susceptance must be {n}x{n}")
        if not np.all(np.isfinite(sus)) or np.any(sus < 0.0):
            raise ConfigurationError("susceptance entries must be finite and >= 0")
        if not np.allclose(sus, sus.T, rtol=0.0, atol=0.0):
            raise ConfigurationError("susceptance must be symmetric")
        if np.any(np.diag(sus) != 0.0):
            raise ConfigurationError("susceptance diagonal must be zero")
        sus = sus.copy()
        sus.setflags(write=False)
        set_(self, "susceptance", sus)
        set_(self, "secure_load", _vector(self.secure_load, n, "secure_load", min_value=0.0))
        set_(self, "vulnerable_load", _vector(self.vulnerable_load, n, "vulnerable_load", min_value=0.0))
        set_(self, "ibr_max_power", _vector(self.ibr_max_power, n, "ibr_max_power", min_value=0.0))
        if not (np.isfinite(self.omega_max) and self.omega_max > 0.0):
            raise ConfigurationError("omega_max must be a positive number")
        set_(self, "omega_max", float(self.omega_max))

    @property
    def total_inertia(self) -> np.ndarray:
        return self.inertia_sg + self.inertia_ibr

    def coupling_laplacian(self) -> np.ndarray:
        """Network matrix in Laplacian form: row sums on the diagonal."""
        return np.diag(self.susceptance.sum(axis=1)) - self.susceptance


@dataclass(frozen=True, eq=False)
class AttackProfile:
    """Dynamic gain (p.u./Hz) and static step (p.u.) of a load-altering attack.

    The compromised-load budget on the dynamic gain is *not* enforced here;
    it is a separate verdict computed by :func:`check_attack_budget`.
    """

    dyn_gain: np.ndarray
    static_component: np.ndarray
    attack_areas: tuple

    def __post_init__(self):
        n = len(np.atleast_1d(np.asarray(self.dyn_gain, dtype=float)))
        set_ = object.__setattr__
        set_(self, "dyn_gain", _vector(self.dyn_gain, n, "dyn_gain", min_value=0.0))
        set_(self, "static_component", _vector(self.static_component, n, "static_component"))
        areas = tuple(sorted(int(a) for a in self.attack_areas))
        if any(a < 0 or a >= n for a in areas):
            raise ConfigurationError("attack_areas out of range")
        set_(self, "attack_areas", areas)
        outside = np.ones(n, dtype=bool)
        for a in areas:
            outside[a] = False
        if np.any(self.dyn_gain[outside] != 0.0) or np.any(self.static_component[outside] != 0.0):
            raise ConfigurationError("attack gains must be zero outside attack_areas")

    @classmethod
    def none(cls, n: int) -> "AttackProfile":
        return cls(np.zeros(n), np.zeros(n), ())


@dataclass(frozen=True, eq=False)
class DroopSchedule:
    """Per-area IBR droop gain (p.u./Hz) and active-power reference (p.u.)."""

    droop_gain: np.ndarray
    power_ref: np.ndarray

    def __post_init__(self):
        n = len(np.atleast_1d(np.asarray(self.droop_gain, dtype=float)))
        set_ = object.__setattr__
        set_(self, "droop_gain", _vector(self.droop_gain, n, "droop_gain", min_value=0.0))
        set_(self, "power_ref", _vector(self.power_ref, n, "power_ref", min_value=0.0))

    @classmethod
    def none(cls, n: int) -> "DroopSchedule":
        return cls(np.zeros(n), np.zeros(n))


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Assembled closed-loop matrices.

    descriptor_a is E = blockdiag(I, -M); feedback_b the feedback matrix;
    state_matrix S = E^-1 B; forcing the constant term of xdot = S x + f.
    """

    descriptor_a: np.ndarray
    feedback_b: np.ndarray
    state_matrix: np.ndarray
    forcing: np.ndarray

    @property
    def n_areas(self) -> int:
        return self.state_matrix.shape[0] // 2


def build_state_space(model: SystemModel, attack: AttackProfile, droop: DroopSchedule) -> StateSpace:
    """Assemble the closed-loop state space for given attack and droop gains.

    The attack and droop gains enter only through their difference, so the
    damping block is computed from (droop - attack) first; equal gains cancel
    bit-exactly.
    """
    n = model.areas
    if attack.dyn_gain.shape != (n,) or droop.droop_gain.shape != (n,):
        raise ConfigurationError("attack/droop dimensioned for a different number of areas")
    m_total = model.total_inertia
    if np.any(m_total <= 0.0):
        raise ConfigurationError("singular inertia matrix: zero total inertia in some area")
    minv = 1.0 / m_total

    stiff = np.diag(model.gov_integral) + model.coupling_laplacian()
    net = droop.droop_gain - attack.dyn_gain
    damp = model.gov_proportional + model.damping + net

    eye = np.eye(n)
    descriptor = np.zeros((2 * n, 2 * n))
    descriptor[:n, :n] = eye
    descriptor[n:, n:] = -np.diag(m_total)

    feedback = np.zeros((2 * n, 2 * n))
    feedback[:n, n:] = eye
    feedback[n:, :n] = stiff
    feedback[n:, n:] = np.diag(damp)

    state = np.zeros((2 * n, 2 * n))
    state[:n, n:] = eye
    state[n:, :n] = -minv[:, None] * stiff
    state[n:, n:] = np.diag(-minv * damp)

    net_load = model.secure_load + attack.static_component - droop.power_ref
    forcing = np.concatenate([np.zeros(n), -minv * net_load])

    for arr in (descriptor, feedback, state, forcing):
        arr.setflags(write=False)
    return StateSpace(descriptor, feedback, state, forcing)


def check_attack_budget(model: SystemModel, attack: AttackProfile) -> np.ndarray:
    """Per-area verdict: the dynamic gain fits the compromised-load budget.

    Area n passes iff K_attack * omega_max <= (vulnerable_load - static)/2.
    """
    lhs = attack.dyn_gain * model.omega_max
    rhs = (model.vulnerable_load - attack.static_component) / 2.0
    return lhs <= rhs


def check_droop_capacity(model: SystemModel, droop: DroopSchedule) -> np.ndarray:
    """Per-area verdict: droop response fits inside the IBR capacity band.

    Area n passes iff ref + K_droop*omega_max <= capacity and
    ref - K_droop*omega_max >= 0 (both bounds inclusive).
    """
    swing = droop.droop_gain * model.omega_max
    upper_ok = droop.power_ref + swing <= model.ibr_max_power
    lower_ok = droop.power_ref - swing >= 0.0
    return upper_ok & lower_ok
