"""Cyber-resilient economic dispatch against load-altering attacks.

Models multi-area grid frequency dynamics under frequency-feedback load
attacks, derives piecewise-linear eigenvalue-stability constraints, and
solves a mixed-integer dispatch that picks inverter droop gains and
setpoints at minimum cost while certifying small-signal stability.
"""

from .errors import (
    BuildError,
    ClassificationError,
    ConfigurationError,
    ContractError,
    CoverageError,
    CredError,
    DegenerateEigenvalueError,
    InfeasibleError,
    InsufficientDataError,
    NumericalError,
    ScenarioError,
    TrackingError,
    ValidationFailure,
)
from .dispatch import (
    CredMilp,
    DispatchScenario,
    DispatchSolution,
    GeneratorSpec,
    PrecheckReport,
    StabilityCertificate,
    StabilityConstraintSet,
    StorageSpec,
    build_cred_milp,
    cost_increment,
    solve_cred,
    stability_precheck,
    validate_solution,
)
from .grid import (
    AttackProfile,
    DroopSchedule,
    StateSpace,
    SystemModel,
    build_state_space,
    check_attack_budget,
    check_droop_capacity,
)
from .linearize import (
    LinearizationPoint,
    SegmentTable,
    build_segment_table,
    evaluate_piecewise,
    net_gain_state_space,
    select_critical_pairs,
)
from .milp import (
    LinearProgram,
    MixedIntegerProgram,
    SolveResult,
    dump_lp_text,
    solve_lp,
    solve_milp,
)
from .simulate import Trajectory, classify_trajectory, simulate
from .stability import (
    EigenSolution,
    SensitivityRecord,
    StabilityVerdict,
    eigen_decompose,
    estimate_eigenvalue_first_order,
    is_stable,
    sensitivity,
)
from .scenario import ScenarioBundle, load_samples, load_scenario, scenario_from_dict
from .uncertainty import (
    AttackEstimate,
    ConfidenceSpec,
    apply_budget_clamp,
    k_eta,
    moments_from_samples,
    robust_gain,
    worst_case_gain,
)
from .workflow import WorkflowConfig, WorkflowReport, run_workflow, sweep_study

__version__ = "0.1.0"
