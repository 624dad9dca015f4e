"""Stability-constrained economic dispatch as a mixed-integer program.

Builds, per period: a single system-wide power balance, committed-generator
limits, wind dispatch with droop headroom on both sides of the reference,
optional storage energy recursion, and, for each critical (eigenvalue,
area) pair, the piecewise eigenvalue-shift constraint encoded with interval
indicator binaries, big-M rows, and exact product envelopes.  Attack gains
are fixed to their robust values; droop gains are decision variables that
enter through the net gain k = robust_gain - K_droop.

Solutions are certified a posteriori by an exact eigenvalue check of every
period's closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BuildError,
    CoverageError,
    InfeasibleError,
    NumericalError,
    ValidationFailure,
)
from .grid import AttackProfile, DroopSchedule, build_state_space
from .linearize import SegmentTable, evaluate_piecewise
from .milp import LinearProgram, MixedIntegerProgram, solve_milp
from .stability import StabilityVerdict, eigen_decompose, is_stable

__all__ = [
    "GeneratorSpec",
    "StorageSpec",
    "DispatchScenario",
    "StabilityConstraintSet",
    "CredMilp",
    "DispatchSolution",
    "StabilityCertificate",
    "PrecheckReport",
    "build_cred_milp",
    "solve_cred",
    "stability_precheck",
    "validate_solution",
    "cost_increment",
]

DELTA_T = 1.0  # hours per period


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Aggregated synchronous fleet of one area."""

    area: int
    marginal_cost: float  # currency per MWh
    p_min: float  # p.u.
    p_max: float  # p.u.
    committed: tuple  # per-period 0/1

    def __post_init__(self):
        if self.p_min < 0 or self.p_max < self.p_min:
            raise BuildError(f"generator in area {self.area}: need 0 <= p_min <= p_max")
        object.__setattr__(self, "committed", tuple(int(bool(u)) for u in self.committed))


@dataclass(frozen=True, eq=False)
class StorageSpec:
    """Battery storage attached to one area; energy arbitrage only."""

    area: int
    soc_min: float
    soc_max: float
    efficiency: float
    power_limit: float  # p.u.
    energy: float  # p.u. * h
    soc_initial: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.soc_min < self.soc_max <= 1.0):
            raise BuildError("storage needs 0 <= soc_min < soc_max <= 1")
        if not (0.0 < self.efficiency <= 1.0):
            raise BuildError("storage efficiency must lie in (0, 1]")
        if self.power_limit < 0 or self.energy <= 0:
            raise BuildError("storage power/energy limits must be positive")
        if not (self.soc_min <= self.soc_initial <= self.soc_max):
            raise BuildError("soc_initial outside [soc_min, soc_max]")


@dataclass(frozen=True, eq=False)
class DispatchScenario:
    """Dispatch horizon on top of a SystemModel, all powers in p.u."""

    model: SystemModel
    demand: np.ndarray  # (T, N)
    wind_available: np.ndarray  # (T, N)
    generators: tuple
    shed_cost: float
    base_power: float = 1000.0  # MW per p.u.
    min_online_fraction: float = 0.0
    storage: tuple = ()
    attack_areas: tuple = ()
    static_attack: np.ndarray | None = None

    def __post_init__(self):
        n = self.model.areas
        dem = np.asarray(self.demand, dtype=float)
        wind = np.asarray(self.wind_available, dtype=float)
        if dem.ndim != 2 or dem.shape[1] != n:
            raise BuildError(f"demand must be (T, {n})")
        if wind.shape != dem.shape:
            raise BuildError("wind_available must match demand shape")
        if np.any(dem < 0) or np.any(wind < -1e-12):
            raise BuildError("demand and wind availability must be >= 0")
        if np.any(wind > self.model.ibr_max_power[None, :] + 1e-9):
            raise BuildError("wind availability exceeds installed IBR capacity")
        t_len = dem.shape[0]
        gens = tuple(self.generators)
        for g in gens:
            if not 0 <= g.area < n:
                raise BuildError(f"generator area {g.area} out of range")
            if len(g.committed) != t_len:
                raise BuildError("generator commitment length differs from horizon")
        stor = tuple(self.storage)
        for s in stor:
            if not 0 <= s.area < n:
                raise BuildError(f"storage area {s.area} out of range")
        areas = tuple(sorted(int(a) for a in self.attack_areas))
        static = np.zeros(n) if self.static_attack is None else np.asarray(self.static_attack, dtype=float)
        if static.shape != (n,):
            raise BuildError(f"static_attack must have shape ({n},)")
        if self.shed_cost < 0 or not (0.0 <= self.min_online_fraction <= 1.0):
            raise BuildError("shed_cost must be >= 0 and min_online_fraction within [0, 1]")
        for arr in (dem, wind, static):
            arr.setflags(write=False)
        set_ = object.__setattr__
        set_(self, "demand", dem)
        set_(self, "wind_available", wind)
        set_(self, "generators", gens)
        set_(self, "storage", stor)
        set_(self, "attack_areas", areas)
        set_(self, "static_attack", static)

    @property
    def n_periods(self) -> int:
        return self.demand.shape[0]


@dataclass(frozen=True, eq=False)
class StabilityConstraintSet:
    """Piecewise tables plus robust gains that parameterize the stability rows.

    strict_margin softens the strict inequalities of the indicator encoding;
    settle_margin additionally shifts the stability boundary left of the
    imaginary axis.  big_m=None sizes the constant per pair as
    2*(|range| + robust gain + droop cap).
    """

    tables: tuple
    robust_gains: np.ndarray
    strict_margin: float = 1e-6
    settle_margin: float = 0.0
    big_m: float | None = None

    def __post_init__(self):
        gains = np.asarray(self.robust_gains, dtype=float)
        if np.any(gains < 0):
            raise BuildError("robust gains must be >= 0")
        if self.strict_margin <= 0 or self.settle_margin < 0:
            raise BuildError("need strict_margin > 0 and settle_margin >= 0")
        gains.setflags(write=False)
        object.__setattr__(self, "robust_gains", gains)
        object.__setattr__(self, "tables", tuple(self.tables))

    def tables_by_pair(self) -> dict:
        out = {}
        for tab in self.tables:
            key = (tab.eigen_index, tab.area)
            if key in out:
                raise BuildError(f"duplicate segment table for pair {key}")
            out[key] = tab
        return dict(sorted(out.items()))


@dataclass(frozen=True, eq=False)
class CredMilp:
    """Assembled instance plus the variable index needed to read solutions."""

    program: MixedIntegerProgram
    index: dict
    periods: tuple
    scenario: DispatchScenario
    stability: StabilityConstraintSet | None


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    """Exact-spectrum check of a solved dispatch, one entry per period."""

    max_real: np.ndarray  # (T,)
    worst_period: int
    worst_eigenvalues: np.ndarray
    estimate_discrepancy: float | None
    passed: bool


@dataclass(eq=False)
class DispatchSolution:
    sg_power: np.ndarray  # (T, G)
    wind_power: np.ndarray  # (T, N)
    wind_reserve: np.ndarray  # (T, N)
    droop: np.ndarray  # (T, N)
    shed: np.ndarray  # (T, N)
    storage_charge: np.ndarray  # (T, S)
    storage_discharge: np.ndarray  # (T, S)
    storage_soc: np.ndarray  # (T, S)
    binaries: dict
    per_period_cost: np.ndarray  # currency
    total_cost: float
    node_count: int
    stability_certificate: StabilityCertificate | None = None

    @property
    def ibr_ref(self) -> np.ndarray:
        return self.wind_power


class _Vars:
    def __init__(self):
        self.bounds = []
        self.index = {}

    def add(self, family: str, key, lo: float, hi: float) -> int:
        idx = len(self.bounds)
        self.bounds.append((lo, hi))
        self.index.setdefault(family, {})[key] = idx
        return idx

    def get(self, family: str, key) -> int:
        return self.index[family][key]


def _pair_big_m(stab: StabilityConstraintSet, table: SegmentTable, kc_cap: float) -> float:
    if stab.big_m is not None:
        return stab.big_m
    gain = float(stab.robust_gains[table.area])
    return 2.0 * (abs(table.range_end) + gain + kc_cap)


def build_cred_milp(
    scn: DispatchScenario,
    stab: StabilityConstraintSet | None,
    allow_shed: bool = False,
    periods=None,
) -> CredMilp:
    """Assemble the dispatch MIP over the given periods (default: all).

    With stab=None (or no tables) the instance is the plain economic
    dispatch: droop and reserve are pinned to zero and no binaries appear.
    Every table must cover [0, robust_gain] of its area, otherwise the
    build fails with a coverage error.
    """
    n = scn.model.areas
    if periods is None:
        periods = tuple(range(scn.n_periods))
    else:
        periods = tuple(int(t) for t in periods)
        for t in periods:
            if not 0 <= t < scn.n_periods:
                raise BuildError(f"period {t} out of range")
    if scn.storage and len(periods) != scn.n_periods:
        raise BuildError("storage couples periods; build the monolithic instance")

    tables = stab.tables_by_pair() if stab is not None else {}
    gains = stab.robust_gains if stab is not None else np.zeros(n)
    if gains.shape != (n,):
        raise BuildError(f"robust_gains must have shape ({n},)")
    for (i, a), tab in tables.items():
        if tab.range_end < 0:
            raise CoverageError(
                f"table for pair ({i},{a}) sweeps negative gains; dispatch needs [0, gain]"
            )
        if gains[a] > tab.range_end + 1e-12:
            raise CoverageError(
                f"table for pair ({i},{a}) covers [0, {tab.range_end:g}] "
                f"but robust gain is {gains[a]:g}"
            )
    covered_areas = {a for (_, a) in tables}

    omega = scn.model.omega_max
    v = _Vars()
    rows = []  # (coeff dict, rel, rhs)
    obj = {}

    def add_row(coeffs: dict, rel: str, rhs: float):
        rows.append((coeffs, rel, rhs))

    binaries = []
    for t in periods:
        for g_id, gen in enumerate(scn.generators):
            u = gen.committed[t]
            v.add("pg", (t, g_id), gen.p_min * u, gen.p_max * u)
        for a in range(n):
            avail = float(scn.wind_available[t, a])
            v.add("pw", (t, a), 0.0, avail)
            v.add("pres", (t, a), 0.0, avail)
            kc_cap = float(gains[a]) if a in covered_areas else 0.0
            v.add("kc", (t, a), 0.0, kc_cap)
            shed_cap = float(scn.demand[t, a]) if allow_shed else 0.0
            v.add("ps", (t, a), 0.0, shed_cap)
        for s_id, stor in enumerate(scn.storage):
            v.add("pch", (t, s_id), 0.0, stor.power_limit)
            v.add("pdis", (t, s_id), 0.0, stor.power_limit)
            v.add("soc", (t, s_id), stor.soc_min, stor.soc_max)
        for (i, a), tab in tables.items():
            if gains[a] <= 0.0:
                continue
            v.add("knet", (t, i, a), 0.0, float(gains[a]))
            n_seg = len(tab.points)
            for m_id in range(n_seg):
                last = m_id == n_seg - 1
                binaries.append(v.add("z1", (t, i, a, m_id), 1.0 if m_id == 0 else 0.0, 1.0))
                binaries.append(v.add("z2", (t, i, a, m_id), 1.0 if last else 0.0, 1.0))
                binaries.append(v.add("z", (t, i, a, m_id), 0.0, 1.0))
                v.add("w", (t, i, a, m_id), 0.0, float(gains[a]))

    for t in periods:
        # system-wide power balance: generation + net storage + shed = demand
        bal = {}
        for g_id in range(len(scn.generators)):
            bal[v.get("pg", (t, g_id))] = 1.0
        for a in range(n):
            bal[v.get("pw", (t, a))] = 1.0
            bal[v.get("ps", (t, a))] = 1.0
        for s_id in range(len(scn.storage)):
            bal[v.get("pdis", (t, s_id))] = 1.0
            bal[v.get("pch", (t, s_id))] = -1.0
        add_row(bal, "=", float(scn.demand[t].sum()))

        if scn.min_online_fraction > 0.0 and scn.generators:
            floor = {v.get("pg", (t, g_id)): 1.0 for g_id in range(len(scn.generators))}
            add_row(floor, ">=", scn.min_online_fraction * float(scn.demand[t].sum()))

        for a in range(n):
            pw, pres, kc = v.get("pw", (t, a)), v.get("pres", (t, a)), v.get("kc", (t, a))
            add_row({pw: 1.0, pres: 1.0}, "<=", float(scn.wind_available[t, a]))
            add_row({pw: 1.0, pres: -1.0}, ">=", 0.0)
            add_row({pres: 1.0, kc: -omega}, "=", 0.0)

        for s_id, stor in enumerate(scn.storage):
            # soc_t = soc_{t-1} + (eff*pch - pdis/eff) * dt / energy
            coeff = {
                v.get("soc", (t, s_id)): 1.0,
                v.get("pch", (t, s_id)): -stor.efficiency * DELTA_T / stor.energy,
                v.get("pdis", (t, s_id)): DELTA_T / (stor.efficiency * stor.energy),
            }
            if t == periods[0]:
                add_row(coeff, "=", stor.soc_initial)
            else:
                coeff[v.get("soc", (t - 1, s_id))] = -1.0
                add_row(coeff, "=", 0.0)
            if t == periods[-1]:
                add_row({v.get("soc", (t, s_id)): 1.0}, "=", stor.soc_initial)

        eig_rows = {}
        for (i, a), tab in tables.items():
            if gains[a] <= 0.0:
                continue
            knet = v.get("knet", (t, i, a))
            add_row({knet: 1.0, v.get("kc", (t, a)): 1.0}, "=", float(gains[a]))
            cap = float(gains[a])
            big_m = _pair_big_m(stab, tab, cap)
            eps = stab.strict_margin
            n_seg = len(tab.points)
            z_sum = {}
            for m_id, point in enumerate(tab.points):
                z1 = v.get("z1", (t, i, a, m_id))
                z2 = v.get("z2", (t, i, a, m_id))
                z = v.get("z", (t, i, a, m_id))
                w = v.get("w", (t, i, a, m_id))
                phi = point.abscissa
                # z1 = 1 iff knet >= phi_m
                add_row({knet: 1.0, z1: -big_m}, ">=", phi - big_m)
                add_row({knet: 1.0, z1: -big_m}, "<=", phi - eps)
                # z2 = 1 iff knet < phi_{m+1}; the last segment reaches range_end
                if m_id + 1 < n_seg:
                    nxt = tab.points[m_id + 1].abscissa
                    add_row({knet: 1.0, z2: big_m}, "<=", nxt - eps + big_m)
                    add_row({knet: 1.0, z2: big_m}, ">=", nxt)
                    # the same threshold seen from both sides: complementary
                    # indicators (valid equality; tightens the relaxation)
                    add_row({z2: 1.0, v.get("z1", (t, i, a, m_id + 1)): 1.0}, "=", 1.0)
                add_row({z: 1.0, z1: -1.0, z2: -1.0}, "=", -1.0)
                # exact envelope of w = knet * z for knet in [0, cap]
                add_row({w: 1.0, z: -cap}, "<=", 0.0)
                add_row({w: 1.0, knet: -1.0}, "<=", 0.0)
                add_row({w: 1.0, knet: -1.0, z: -cap}, ">=", -cap)
                z_sum[z] = 1.0
            add_row(z_sum, "=", 1.0)

            row = eig_rows.setdefault(i, {})
            for m_id, point in enumerate(tab.points):
                z = v.get("z", (t, i, a, m_id))
                w = v.get("w", (t, i, a, m_id))
                slope_re = point.slope.real
                offset = (point.eigenvalue - tab.base_eigenvalue).real - slope_re * point.abscissa
                row[w] = row.get(w, 0.0) + slope_re
                row[z] = row.get(z, 0.0) + offset

        for i, row in sorted(eig_rows.items()):
            base_re = None
            for (ii, a), tab in tables.items():
                if ii == i:
                    base_re = tab.base_eigenvalue.real
                    break
            rhs = -(stab.strict_margin + stab.settle_margin) - base_re
            add_row(dict(row), "<=", rhs)

        for g_id, gen in enumerate(scn.generators):
            obj[v.get("pg", (t, g_id))] = gen.marginal_cost * scn.base_power * DELTA_T
        for a in range(n):
            obj[v.get("ps", (t, a))] = scn.shed_cost * scn.base_power * DELTA_T

    n_vars = len(v.bounds)
    c = np.zeros(n_vars)
    for j, val in obj.items():
        c[j] = val
    lhs = np.zeros((len(rows), n_vars))
    rel = []
    rhs_v = np.zeros(len(rows))
    for r, (coeffs, relation, rhs) in enumerate(rows):
        for j, val in coeffs.items():
            lhs[r, j] = val
        rel.append(relation)
        rhs_v[r] = rhs
    bounds = np.array(v.bounds, dtype=float)
    lp = LinearProgram(c, lhs, tuple(rel), rhs_v, bounds)
    mip = MixedIntegerProgram(lp, tuple(binaries))
    return CredMilp(mip, v.index, periods, scn, stab)


def _extract(problem: CredMilp, values: np.ndarray, out: DispatchSolution):
    scn = problem.scenario
    idx = problem.index
    for t in problem.periods:
        for g_id in range(len(scn.generators)):
            out.sg_power[t, g_id] = values[idx["pg"][(t, g_id)]]
        for a in range(scn.model.areas):
            out.wind_power[t, a] = values[idx["pw"][(t, a)]]
            out.wind_reserve[t, a] = values[idx["pres"][(t, a)]]
            out.droop[t, a] = values[idx["kc"][(t, a)]]
            out.shed[t, a] = values[idx["ps"][(t, a)]]
        for s_id in range(len(scn.storage)):
            out.storage_charge[t, s_id] = values[idx["pch"][(t, s_id)]]
            out.storage_discharge[t, s_id] = values[idx["pdis"][(t, s_id)]]
            out.storage_soc[t, s_id] = values[idx["soc"][(t, s_id)]]
        for key, j in idx.get("z", {}).items():
            out.binaries[key] = float(values[j])
        cost = 0.0
        for g_id, gen in enumerate(scn.generators):
            cost += gen.marginal_cost * scn.base_power * DELTA_T * out.sg_power[t, g_id]
        cost += scn.shed_cost * scn.base_power * DELTA_T * out.shed[t].sum()
        out.per_period_cost[t] = cost


def solve_cred(
    scn: DispatchScenario,
    stab: StabilityConstraintSet | None,
    allow_shed: bool = False,
) -> DispatchSolution:
    """Solve the dispatch, decomposing per period when storage permits.

    Raises InfeasibleError when any period admits no feasible point and
    NumericalError when the solver hits its budget.
    """
    t_len, n = scn.n_periods, scn.model.areas
    sol = DispatchSolution(
        sg_power=np.zeros((t_len, len(scn.generators))),
        wind_power=np.zeros((t_len, n)),
        wind_reserve=np.zeros((t_len, n)),
        droop=np.zeros((t_len, n)),
        shed=np.zeros((t_len, n)),
        storage_charge=np.zeros((t_len, len(scn.storage))),
        storage_discharge=np.zeros((t_len, len(scn.storage))),
        storage_soc=np.zeros((t_len, len(scn.storage))),
        binaries={},
        per_period_cost=np.zeros(t_len),
        total_cost=0.0,
        node_count=0,
    )
    if scn.storage:
        chunks = [None]  # monolithic
    else:
        chunks = [[t] for t in range(t_len)]
    for chunk in chunks:
        problem = build_cred_milp(scn, stab, allow_shed=allow_shed, periods=chunk)
        res = solve_milp(problem.program)
        if res.status == "infeasible":
            where = "horizon" if chunk is None else f"period {chunk[0]}"
            raise InfeasibleError(f"dispatch infeasible in {where}"
                                  + ("" if allow_shed else " (shedding disabled)"))
        if not res.optimal:
            raise NumericalError(f"dispatch solve ended with status {res.status}")
        _extract(problem, res.values, sol)
        sol.node_count += res.node_count or 0
    sol.total_cost = float(sol.per_period_cost.sum())
    return sol


@dataclass(frozen=True, eq=False)
class PrecheckReport:
    verdict: StabilityVerdict
    eigenvalues: np.ndarray

    def __bool__(self) -> bool:
        return self.verdict.stable


def _attack_from_gains(scn: DispatchScenario, gains: np.ndarray) -> AttackProfile:
    gains = np.asarray(gains, dtype=float)
    active = set(int(a) for a in np.flatnonzero(gains > 0))
    active |= set(int(a) for a in np.flatnonzero(scn.static_attack != 0.0))
    active |= set(scn.attack_areas)
    return AttackProfile(gains, scn.static_attack, tuple(sorted(active)))


def stability_precheck(scn: DispatchScenario, droop: DroopSchedule, gains) -> PrecheckReport:
    """Eigenvalue check of the current operating point under robust gains."""
    ss = build_state_space(scn.model, _attack_from_gains(scn, np.asarray(gains, dtype=float)), droop)
    eig = eigen_decompose(ss)
    return PrecheckReport(is_stable(eig), np.array(eig.eigenvalues))


def validate_solution(
    scn: DispatchScenario,
    sol: DispatchSolution,
    gains,
    stab: StabilityConstraintSet | None = None,
) -> StabilityCertificate:
    """Exact a-posteriori stability certificate for every period.

    Rebuilds each period's closed loop with the solved droop gains and the
    robust attack gains and demands a strictly negative spectral abscissa.
    Raises ValidationFailure naming the first offending period/eigenvalue.
    """
    gains = np.asarray(gains, dtype=float)
    t_len = scn.n_periods
    max_real = np.zeros(t_len)
    worst_t, worst_eigs = 0, None
    discrepancy = None
    tables = stab.tables_by_pair() if stab is not None else {}
    for t in range(t_len):
        droop = DroopSchedule(sol.droop[t], sol.wind_power[t])
        ss = build_state_space(scn.model, _attack_from_gains(scn, gains), droop)
        eig = eigen_decompose(ss)
        verdict = is_stable(eig)
        max_real[t] = verdict.max_real
        if worst_eigs is None or verdict.max_real > max_real[worst_t]:
            worst_t, worst_eigs = t, np.array(eig.eigenvalues)
        if verdict.max_real >= 0.0:
            offender = eig.eigenvalues[np.argmax(eig.eigenvalues.real)]
            raise ValidationFailure(
                f"period {t}: exact eigenvalue {offender:.6g} is not in the open left "
                "half-plane; rebuild tables with a smaller error limit"
            )
        for (i, a), tab in tables.items():
            k = gains[a] - sol.droop[t, a]
            try:
                est = (tab.base_eigenvalue + evaluate_piecewise(tab, k)).real
            except CoverageError:
                continue
            exact = eig.eigenvalues.real[np.argmin(np.abs(eig.eigenvalues.real - est))]
            gap = abs(est - exact)
            discrepancy = gap if discrepancy is None else max(discrepancy, gap)
    return StabilityCertificate(
        max_real=max_real,
        worst_period=int(worst_t),
        worst_eigenvalues=worst_eigs,
        estimate_discrepancy=discrepancy,
        passed=True,
    )


def cost_increment(scn: DispatchScenario, baseline_cost: float, cred_cost: float) -> float:
    """Extra cost of the stability-constrained dispatch over the baseline."""
    inc = cred_cost - baseline_cost
    tol = 1e-6 * max(1.0, abs(baseline_cost))
    if inc < -tol:
        raise NumericalError(
            f"stability-constrained cost {cred_cost:.6f} fell below the baseline "
            f"{baseline_cost:.6f}; the instances are inconsistent"
        )
    return max(inc, 0.0)
