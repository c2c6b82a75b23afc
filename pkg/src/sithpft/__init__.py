"""POMDP online planning over particle beliefs with information-theoretic
rewards: the PFT-DPW baseline and SITH-PFT, which replaces exact entropy
rewards with adaptively refined bounds while provably reproducing the
baseline's tree and decisions."""

from .baseline import PftDpwPlanner, plan_baseline
from .bounds import (
    BoundsPair,
    SimplificationCache,
    boers_minus_entropy,
    init_cache,
    max_transition_density,
    refine,
)
from .common import PlanReport, dpw_allows_new_child, ucb, ucb_bounds
from .core import (
    GenerativeModel,
    ParticleBelief,
    PlannerConfig,
    SeededStream,
    expected_state_reward,
    normalize_weights,
)
from .errors import (
    AlreadyConvergedError,
    DegenerateEntropyError,
    DegeneratePosteriorError,
    DegenerateWeightsError,
    InternalConsistencyError,
    ModelEvaluationError,
    PlanningError,
    UnsupportedModelError,
)
from .filtering import PFUpdateResult, pf_update, sample_observation
from .harness import (
    ExperimentSpec,
    RunReport,
    bench_entropy,
    compare_trees,
    export_report,
    run_experiment,
)
from .lightdark import LightDarkConfig, LightDarkModel
from .sith import GapQuery, SithPftPlanner, plan, reconstruct_bounds, refine_condition, select_best
from .tree import BeliefActionNode, BeliefNode, RolloutRecord, tree_digest, tree_to_dict

__all__ = [
    "AlreadyConvergedError",
    "BeliefActionNode",
    "BeliefNode",
    "BoundsPair",
    "DegenerateEntropyError",
    "DegeneratePosteriorError",
    "DegenerateWeightsError",
    "ExperimentSpec",
    "GapQuery",
    "GenerativeModel",
    "InternalConsistencyError",
    "LightDarkConfig",
    "LightDarkModel",
    "ModelEvaluationError",
    "PFUpdateResult",
    "ParticleBelief",
    "PftDpwPlanner",
    "PlanReport",
    "PlannerConfig",
    "PlanningError",
    "RolloutRecord",
    "RunReport",
    "SeededStream",
    "SimplificationCache",
    "SithPftPlanner",
    "UnsupportedModelError",
    "bench_entropy",
    "boers_minus_entropy",
    "compare_trees",
    "dpw_allows_new_child",
    "expected_state_reward",
    "export_report",
    "init_cache",
    "max_transition_density",
    "normalize_weights",
    "pf_update",
    "plan",
    "plan_baseline",
    "reconstruct_bounds",
    "refine",
    "refine_condition",
    "run_experiment",
    "sample_observation",
    "select_best",
    "tree_digest",
    "tree_to_dict",
    "ucb",
    "ucb_bounds",
]

__version__ = "0.1.0"
