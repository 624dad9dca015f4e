"""Command-line entry point.

Subcommands: analyze, linearize, dispatch, simulate, workflow, sweep.
Exit codes: 0 success, 2 validation failure, 3 infeasible, 4 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import (
    CredError,
    DegenerateEigenvalueError,
    InfeasibleError,
    ScenarioError,
    ValidationFailure,
)
from .grid import AttackProfile, DroopSchedule, build_state_space
from .linearize import build_segment_table, select_critical_pairs
from .scenario import load_samples, load_scenario
from .simulate import classify_trajectory, simulate
from .stability import eigen_decompose, sensitivity
from .uncertainty import (
    ConfidenceSpec,
    apply_budget_clamp,
    moments_from_samples,
    robust_gain,
    worst_case_gain,
)
from .workflow import SWEEP_AXES, WorkflowConfig, run_workflow, sweep_study, write_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--samples", default=None, help="detection-sample JSON file")
    parser.add_argument("--eta", type=float, default=0.95, help="confidence level in (0,1)")
    parser.add_argument("--seed", type=int, default=None, help="seed for sample synthesis")
    parser.add_argument("--worst-case", action="store_true",
                        help="use budget-saturating attack gains")
    parser.add_argument("--eps-lim", type=float, default=0.02,
                        help="linearization error limit on Re(lambda)")
    parser.add_argument("--eps-phi", type=float, default=None,
                        help="sweep grid step (default |range|/200)")
    parser.add_argument("--eps-strict", type=float, default=1e-6,
                        help="softening of strict inequalities")
    parser.add_argument("--settle-margin", type=float, default=0.05,
                        help="extra left shift of the stability boundary")


def _config_from_args(args) -> WorkflowConfig:
    mode = "worst_case" if args.worst_case else getattr(args, "mode", "auto")
    return WorkflowConfig(
        scenario_path=args.scenario,
        samples_path=args.samples,
        detection_score=getattr(args, "r", 1.0),
        detection_threshold=getattr(args, "r0", 0.0),
        eta=args.eta,
        mode=mode,
        output_dir=args.out,
        eps_lim=args.eps_lim,
        eps_phi=args.eps_phi,
        eps_strict=args.eps_strict,
        settle_margin=args.settle_margin,
        seed=args.seed,
    )


def _gains_for(args, bundle) -> np.ndarray:
    """Robust gains from samples when given, else the worst-case budget."""
    if args.samples and not args.worst_case:
        samples = load_samples(args.samples, bundle.base_power)
        est = moments_from_samples(samples, bundle.model.areas)
        gains = robust_gain(est, ConfidenceSpec(args.eta))
        return apply_budget_clamp(bundle.model, bundle.attack_areas, gains,
                                  bundle.static_attack)
    return worst_case_gain(bundle.model, bundle.attack_areas, bundle.static_attack)


def cmd_analyze(args) -> int:
    bundle = load_scenario(args.scenario)
    n = bundle.model.areas
    ss = build_state_space(bundle.model, AttackProfile.none(n), DroopSchedule.none(n))
    eig = eigen_decompose(ss)
    out = Path(args.out)
    write_csv(out / "eigenvalues.csv", ["index", "re", "im"],
              [[i, lam.real, lam.imag] for i, lam in enumerate(eig.eigenvalues)])
    areas = bundle.attack_areas or tuple(range(n))
    rows = []
    for i in range(len(eig)):
        for a in areas:
            try:
                rec = sensitivity(ss, eig, i, a)
            except DegenerateEigenvalueError:
                print(f"note: eigenvalue {i} repeated; sensitivity skipped", file=sys.stderr)
                continue
            rows.append([i, a, rec.d_lambda_dKL.real, rec.d_lambda_dKL.imag])
    write_csv(out / "sensitivities.csv", ["eigen_index", "area", "d_re", "d_im"], rows)
    print(f"wrote {out / 'eigenvalues.csv'} and {out / 'sensitivities.csv'}")
    return EXIT_OK


def cmd_linearize(args) -> int:
    bundle = load_scenario(args.scenario)
    gains = _gains_for(args, bundle)
    active = tuple(int(a) for a in np.flatnonzero(gains > 0))
    if not active:
        raise ScenarioError("no attacked area with a positive gain to sweep")
    pairs = select_critical_pairs(bundle.model, active, gains)
    seg_rows, audit_rows = [], []
    for i, a in pairs:
        step = args.eps_phi if args.eps_phi is not None else float(gains[a]) / 200.0
        tab = build_segment_table(bundle.model, i, a, float(gains[a]), args.eps_lim, step)
        for p in tab.points:
            seg_rows.append([i, a, p.abscissa, p.eigenvalue.real, p.eigenvalue.imag,
                             p.slope.real, p.slope.imag])
        for k, err in zip(tab.grid_abscissas, tab.grid_errors):
            audit_rows.append([i, a, k, err])
    out = Path(args.out)
    write_csv(out / "segments.csv",
              ["eigen_index", "area", "abscissa", "eig_re", "eig_im", "slope_re", "slope_im"],
              seg_rows)
    write_csv(out / "linearize_audit.csv",
              ["eigen_index", "area", "abscissa", "abs_re_error"], audit_rows)
    print(f"wrote {out / 'segments.csv'} ({len(pairs)} pairs)")
    return EXIT_OK


def cmd_dispatch(args) -> int:
    cfg = _config_from_args(args)
    rep = run_workflow(cfg)
    print(f"branch: {rep.branch_taken}  cost: {rep.final_cost:.2f}  "
          f"increment: {rep.cost_increment:.2f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    bundle = load_scenario(args.scenario)
    n = bundle.model.areas
    gains = np.zeros(n)
    if args.worst_case or args.samples:
        gains = _gains_for(args, bundle)
    droop_gain = np.zeros(n)
    if args.kc:
        droop_gain = np.array([float(x) for x in args.kc.split(",")]) / bundle.base_power
        if droop_gain.shape != (n,):
            raise ScenarioError(f"--kc must list {n} comma-separated MW/Hz values")
    active = tuple(int(a) for a in np.flatnonzero(gains > 0))
    attack = AttackProfile(gains, bundle.static_attack,
                           tuple(sorted(set(active) | set(bundle.attack_areas))))
    ss = build_state_space(bundle.model, attack, DroopSchedule(droop_gain, np.zeros(n)))

    step = np.zeros(n)
    area = args.step_area
    if area is None:
        area = bundle.attack_areas[0] if bundle.attack_areas else 0
    load = bundle.model.secure_load[area] + bundle.model.vulnerable_load[area]
    step[area] = (args.step_mw / bundle.base_power) if args.step_mw else 0.01 * load

    dt = args.dt
    if dt is None:
        lam_max = float(np.abs(np.linalg.eigvals(ss.state_matrix)).max())
        dt = min(0.02, 1.0 / (12.0 * lam_max)) if lam_max > 0 else 0.02
    traj = simulate(ss, step, t_step=args.t_step, t_end=args.t_end, dt=dt)
    out = Path(args.out)
    header = ["t"] + [f"omega_{a}" for a in range(n)] + [f"delta_{a}" for a in range(n)]
    rows = [
        [traj.times[k]] + list(traj.omega[k]) + list(traj.delta[k])
        for k in range(len(traj.times))
    ]
    write_csv(out / "trajectory.csv", header, rows)
    try:
        label = classify_trajectory(traj)
    except CredError as exc:
        label = f"indeterminate ({exc})"
    print(f"trajectory: {label}; diverged={traj.diverged}; wrote {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_workflow(args) -> int:
    cfg = _config_from_args(args)
    rep = run_workflow(cfg)
    print(f"branch: {rep.branch_taken}")
    print(f"baseline cost: {rep.baseline_cost:.2f}")
    print(f"final cost:    {rep.final_cost:.2f}")
    print(f"increment:     {rep.cost_increment:.2f}")
    if rep.certificate is not None:
        worst = max(rep.certificate["max_real_per_period"])
        print(f"certificate:   max Re(lambda) = {worst:.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    grid = [float(x) for x in args.grid.split(",") if x.strip()]
    if not grid:
        raise ScenarioError("--grid must list at least one value")
    rows = sweep_study(cfg, args.axis, grid)
    for r in rows:
        if r.error:
            print(f"{r.axis}={r.value:g}: FAILED ({r.error})")
        else:
            print(f"{r.axis}={r.value:g}: avg increment {r.avg_increment:.2f}, "
                  f"shed {r.shed_mwh:.1f} MWh, branch {r.branch}")
    print(f"wrote {Path(cfg.output_dir) / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cred",
        description="stability-constrained dispatch against load-altering attacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="eigenvalues and sensitivities of the base system")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("linearize", help="build piecewise eigenvalue tables")
    _common(p)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("dispatch", help="solve the stability-constrained dispatch")
    _common(p)
    p.add_argument("--mode", choices=("auto", "worst_case", "mean_only"), default="auto")
    p.add_argument("--r", type=float, default=1.0, help="detection score")
    p.add_argument("--r0", type=float, default=0.0, help="detection threshold")
    p.set_defaults(func=cmd_dispatch)

    p = sub.add_parser("simulate", help="time-domain step response")
    _common(p)
    p.add_argument("--kc", default=None, help="per-area droop gains, MW/Hz, comma separated")
    p.add_argument("--t-step", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=40.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--step-area", type=int, default=None)
    p.add_argument("--step-mw", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("workflow", help="detection-to-certificate pipeline")
    _common(p)
    p.add_argument("--mode", choices=("auto", "worst_case", "mean_only"), default="auto")
    p.add_argument("--r", type=float, default=1.0, help="detection score")
    p.add_argument("--r0", type=float, default=0.0, help="detection threshold")
    p.set_defaults(func=cmd_workflow)

    p = sub.add_parser("sweep", help="repeat the workflow across a parameter grid")
    _common(p)
    p.add_argument("--mode", choices=("auto", "worst_case", "mean_only"), default="auto")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--r0", type=float, default=0.0)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--grid", required=True, help="comma-separated grid values")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CredError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
