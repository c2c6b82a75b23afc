"""PFT-DPW baseline: UCB action selection with the entropy reward computed
exactly at every created node."""

from __future__ import annotations

import math

import numpy as np

from .bounds import LOG_FLOOR, boers_minus_entropy
from .common import PlanReport, TreeSearchPlanner, ucb
from .core import GenerativeModel, ParticleBelief, PlannerConfig
from .filtering import PFUpdateResult
from .tree import BeliefNode


def _minus_entropy_from_pf(pf: PFUpdateResult, action, model) -> float:
    """Full estimator evaluation reusing the likelihoods cached by pf_update."""
    prior = pf.prior_resampled
    posterior = pf.posterior
    mat = np.asarray(model.transition_density_block(posterior.particles, prior.particles, action), dtype=float)
    inner = mat @ prior.weights
    term_a = -math.log(max(float(pf.obs_likelihoods @ prior.weights), LOG_FLOOR))
    products = np.maximum(pf.obs_likelihoods * inner, LOG_FLOOR)
    term_b = float(posterior.weights @ np.log(products))
    return term_a + term_b


class PftDpwPlanner(TreeSearchPlanner):
    """Baseline planner; stores the exact entropy reward as a collapsed
    bounds pair so node bookkeeping matches the simplified planner's."""

    name = "pft-dpw"

    def __init__(self, model: GenerativeModel, config: PlannerConfig):
        super().__init__(model, config)

    def _entropy_value(self, pf, action) -> float:
        if self.config.lam == 0.0:
            return 0.0  # reward weight zero: skip the O(m^2) evaluation
        return _minus_entropy_from_pf(pf, action, self.model)

    def _creation_bounds(self, pf, action, label: str):
        value = self._entropy_value(pf, action)
        return value, value, None

    def _rollout_bounds(self, pf, action, label: str):
        value = self._entropy_value(pf, action)
        return value, value, None

    def _select_among_visited(self, node: BeliefNode) -> int:
        cfg = self.config
        best_index = 0
        best_score = -math.inf
        for ha in node.actions:
            score = ucb(ha, node.visits, cfg.c, cfg.lam)
            if score > best_score:  # ties keep the lowest action index
                best_score = score
                best_index = ha.index
        return best_index

    def _final_action_index(self, root: BeliefNode) -> int:
        lam = self.config.lam
        best_index = None
        best_q = -math.inf
        for ha in self._visited_actions(root):
            q = ha.q_state + lam * ha.lower
            if q > best_q:
                best_q = q
                best_index = ha.index
        return best_index


def plan_baseline(
    belief: ParticleBelief, config: PlannerConfig, model: GenerativeModel
) -> tuple[object, PlanReport, BeliefNode]:
    """One-shot baseline planning session."""
    return PftDpwPlanner(model, config).plan(belief)


__all__ = ["PftDpwPlanner", "plan_baseline", "boers_minus_entropy"]
