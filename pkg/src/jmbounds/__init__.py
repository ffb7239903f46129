"""Error trade-off bounds for three incompatible qubit observables.

Joint measurability tests and joint POVMs for qubit observable triples,
penalty-method lower bounds of the total worst-case deviation, and a
shot-noise simulation of the single-ion measurement protocol.
"""

__version__ = "0.1.0"

from .qubit import TOL, Effect, Observable, PulseParams, QubitState, effect_of_observable, prob, rotate_bloch
from .fermat import FtResult, ft_point, ft_point_oracle, total_distance
from .joint import (
    JmReport,
    JointPovm,
    PovmConstructionError,
    Triple,
    build_povm_general,
    build_povm_orthogonal,
    build_povm_pair,
    is_rank_one,
    jm_check_coplanar,
    jm_check_one_orthogonal,
    jm_check_orthogonal,
    jm_check_pair,
    jm_check_triple,
    one_orthogonal_ft,
    triangle_contains,
)
from .uncertainty import UncertaintyBreakdown, delta_total, wasserstein_empirical, wasserstein_state, worst_case_delta
from .bounds import (
    BoundResult,
    ObjectiveKind,
    SolverConfig,
    analytic_orthogonal_bound,
    brute_force_bound,
    objective_eval,
    penalty_scaling_study,
    solve_lower_bound,
)
from .scenarios import SweepSpec, approx_family_orthogonal, run_sweep, triad
from .ionsim import (
    MeasurementPlan,
    ShotConfig,
    ShotEstimate,
    estimate_marginal,
    measure_angles,
    prep_angles,
    run_experiment,
    simulate_effect,
)

__all__ = [
    "__version__",
    "TOL",
    "Effect",
    "Observable",
    "PulseParams",
    "QubitState",
    "effect_of_observable",
    "prob",
    "rotate_bloch",
    "FtResult",
    "ft_point",
    "ft_point_oracle",
    "total_distance",
    "JmReport",
    "JointPovm",
    "PovmConstructionError",
    "Triple",
    "build_povm_general",
    "build_povm_orthogonal",
    "build_povm_pair",
    "is_rank_one",
    "jm_check_coplanar",
    "jm_check_one_orthogonal",
    "jm_check_orthogonal",
    "jm_check_pair",
    "jm_check_triple",
    "one_orthogonal_ft",
    "triangle_contains",
    "UncertaintyBreakdown",
    "delta_total",
    "wasserstein_empirical",
    "wasserstein_state",
    "worst_case_delta",
    "BoundResult",
    "ObjectiveKind",
    "SolverConfig",
    "analytic_orthogonal_bound",
    "brute_force_bound",
    "objective_eval",
    "penalty_scaling_study",
    "solve_lower_bound",
    "SweepSpec",
    "approx_family_orthogonal",
    "run_sweep",
    "triad",
    "MeasurementPlan",
    "ShotConfig",
    "ShotEstimate",
    "estimate_marginal",
    "measure_angles",
    "prep_angles",
    "run_experiment",
    "simulate_effect",
]
