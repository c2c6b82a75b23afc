"""Search machinery shared by the baseline and the simplified planner.

Everything that samples — new observation branches, particle-filter
updates, branch reuse, rollouts — lives here and draws from streams forked
by tree-position labels. Both planners therefore consume bit-identical
randomness at identical tree positions, which is what makes their trees
comparable node for node. Planner-specific behavior (how entropy rewards
are produced and how actions are selected) enters through the hook methods
subclasses override.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import GenerativeModel, ParticleBelief, PlannerConfig, SeededStream, expected_state_reward
from .errors import DegeneratePosteriorError, InternalConsistencyError
from .filtering import pf_update, sample_observation
from .tree import BeliefActionNode, BeliefNode, ChildEntry, RolloutEntry, RolloutRecord, tree_digest


def ucb(node: BeliefActionNode, parent_visits: int, c: float, lam: float) -> float:
    """UCB score Q(ha) + c * sqrt(log N(h) / N(ha)) with Q = Q_x + lam * Q_I.

    Unvisited actions score +inf so each gets expanded once."""
    if node.visits == 0:
        return math.inf
    q = node.q_state + lam * node.lower  # baseline keeps lower == upper == Q_I
    return q + c * math.sqrt(math.log(parent_visits) / node.visits)


def ucb_bounds(node: BeliefActionNode, parent_visits: int, c: float, lam: float) -> tuple[float, float]:
    """Lower/upper UCB induced by the entropy-return bounds."""
    explore = c * math.sqrt(math.log(parent_visits) / node.visits)
    return (
        node.q_state + lam * node.lower + explore,
        node.q_state + lam * node.upper + explore,
    )


def dpw_allows_new_child(n_ha: int, n_children: int, k_o: float, alpha_o: float) -> bool:
    """Observation progressive widening test |C(ha)| <= k_o * N(ha)^alpha_o."""
    return n_children <= k_o * float(n_ha) ** alpha_o


class SimReturn(NamedTuple):
    """Discounted returns of one simulation: state-reward channel plus the
    lower/upper entropy channel (equal in the baseline)."""

    r: float
    low: float
    up: float


ZERO_RETURN = SimReturn(0.0, 0.0, 0.0)


@dataclass
class PlanReport:
    """Per-planning-session record."""

    planner: str
    action_index: int
    action_repr: str
    wall_time_s: float
    n_simulations: int
    tree_digest: str
    tree_nodes: int
    resimplify_passes: int = 0
    refine_promotions: int = 0
    brute_escalations: int = 0
    cache_level_histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "planner": self.planner,
            "action_index": self.action_index,
            "action_repr": self.action_repr,
            "wall_time_s": self.wall_time_s,
            "n_simulations": self.n_simulations,
            "tree_digest": self.tree_digest,
            "tree_nodes": self.tree_nodes,
            "resimplify_passes": self.resimplify_passes,
            "refine_promotions": self.refine_promotions,
            "brute_escalations": self.brute_escalations,
            "cache_level_histogram": {str(k): v for k, v in self.cache_level_histogram.items()},
        }


class RolloutOutcome(NamedTuple):
    r: float
    low: float
    up: float
    record: Optional[RolloutRecord]


class TreeSearchPlanner:
    """Common MCTS-over-beliefs engine (progressive widening, rollouts,
    visit accounting). Subclasses provide the reward representation and the
    action-selection rule."""

    name = "base"

    def __init__(self, model: GenerativeModel, config: PlannerConfig):
        self.model = model
        self.config = config
        self.actions = list(model.actions())
        self._move_action_indices = [i for i, a in enumerate(self.actions) if not model.is_terminal_action(a)]
        self._stream: SeededStream = SeededStream.from_seed(config.seed)
        self.node_count = 0

    # -- hooks -----------------------------------------------------------

    def _creation_bounds(self, pf, action, label: str):
        """Entropy reward of a fresh tree transition -> (lower, upper, cache)."""
        raise NotImplementedError

    def _rollout_bounds(self, pf, action, label: str):
        """Entropy reward of a rollout step -> (lower, upper, cache)."""
        raise NotImplementedError

    def _select_among_visited(self, node: BeliefNode) -> int:
        """Pick an action index once every action has been visited."""
        raise NotImplementedError

    def _final_action_index(self, root: BeliefNode) -> int:
        """Pick the action to execute after all simulations."""
        raise NotImplementedError

    def _needs_reconstruction(self, depth: int) -> bool:
        return False

    def _reconstruct(self, ha: BeliefActionNode) -> None:  # pragma: no cover - baseline never calls
        raise NotImplementedError

    def _begin_simulation(self) -> None:
        pass

    # -- planning --------------------------------------------------------

    def plan(self, belief: ParticleBelief) -> tuple[object, PlanReport, BeliefNode]:
        """Run one planning session from `belief`; return (action, report, tree)."""
        self._stream = SeededStream.from_seed(self.config.seed)
        root = BeliefNode(belief, depth=self.config.d_max, label="r", visits=0)
        self.node_count = 1
        start = time.perf_counter()
        for _ in range(self.config.n_iter):
            self._begin_simulation()
            self._simulate(root, self.config.d_max)
        action_index = self._final_action_index(root)
        elapsed = time.perf_counter() - start
        report = PlanReport(
            planner=self.name,
            action_index=action_index,
            action_repr=repr(self.actions[action_index]),
            wall_time_s=elapsed,
            n_simulations=self.config.n_iter,
            tree_digest=tree_digest(root),
            tree_nodes=self.node_count,
        )
        self._fill_report(report, root)
        return self.actions[action_index], report, root

    def _fill_report(self, report: PlanReport, root: BeliefNode) -> None:
        pass

    # -- simulation ------------------------------------------------------

    def _ensure_actions(self, node: BeliefNode) -> None:
        if node.actions is None:
            node.actions = [
                BeliefActionNode(i, a, self.model.is_terminal_action(a)) for i, a in enumerate(self.actions)
            ]

    def _choose_action(self, node: BeliefNode) -> int:
        self._ensure_actions(node)
        for ha in node.actions:
            if ha.visits == 0:
                return ha.index  # expand unvisited actions in index order
        return self._select_among_visited(node)

    def _belief_terminal(self, belief: ParticleBelief) -> bool:
        terminal = self.model.is_terminal_state(belief.particles)
        return bool(np.all(terminal[belief.weights > 0]))

    def _simulate(self, node: BeliefNode, depth: int) -> SimReturn:
        if depth == 0 or self._belief_terminal(node.belief):
            node.visits += 1  # depth-0 passes still count for reconstruction weights
            return ZERO_RETURN

        ai = self._choose_action(node)
        ha = node.actions[ai]
        cfg = self.config

        if ha.terminal:
            ret = SimReturn(expected_state_reward(node.belief, ha.action, self.model), 0.0, 0.0)
        elif dpw_allows_new_child(ha.visits, len(ha.children), cfg.k_o, cfg.alpha_o):
            ret = self._expand(node, ha, depth)
        else:
            pick = self._stream.fork(f"{node.label}/a{ai}/pick{ha.visits}")
            entry = ha.children[int(pick.gen.integers(len(ha.children)))]
            sub = self._simulate(entry.node, depth - 1)
            ret = SimReturn(entry.r_x + cfg.gamma * sub.r, entry.lower + cfg.gamma * sub.low, entry.upper + cfg.gamma * sub.up)

        node.visits += 1
        ha.visits += 1
        ha.q_state += (ret.r - ha.q_state) / ha.visits
        if not ha.terminal and self._needs_reconstruction(depth):
            self._reconstruct(ha)  # replaces the mean update; current sim enters via child stats
        else:
            ha.lower += (ret.low - ha.lower) / ha.visits
            ha.upper += (ret.up - ha.upper) / ha.visits
        self._check_accounting(node)
        return ret

    def _expand(self, node: BeliefNode, ha: BeliefActionNode, depth: int) -> SimReturn:
        cfg = self.config
        ci = len(ha.children)
        site = self._stream.fork(f"{node.label}/a{ha.index}/x{ci}")
        gen = site.gen
        observation = sample_observation(node.belief, ha.action, self.model, gen)
        try:
            pf = pf_update(node.belief, ha.action, observation, self.model, gen)
        except DegeneratePosteriorError:
            ha.aborted += 1
            return ZERO_RETURN

        child_label = f"{node.label}/a{ha.index}/o{ci}"
        lower, upper, cache = self._creation_bounds(pf, ha.action, child_label)
        child = BeliefNode(pf.posterior, depth - 1, child_label, visits=1)
        entry = ChildEntry(pf.r_x, child, observation, cache=cache, value=lower)
        child.entry = entry
        ha.children.append(entry)
        self.node_count += 1

        roll = self._rollout(child, depth - 1)
        child.rollout = roll.record
        return SimReturn(
            pf.r_x + cfg.gamma * roll.r,
            entry.lower + cfg.gamma * roll.low,
            entry.upper + cfg.gamma * roll.up,
        )

    def _rollout(self, node: BeliefNode, depth: int) -> RolloutOutcome:
        """Default-policy rollout: uniformly random non-terminal actions,
        discounted two-channel returns, optional refinable step records."""
        cfg = self.config
        belief = node.belief
        r_sum = low_sum = up_sum = 0.0
        entries: list[RolloutEntry] = []
        for t in range(depth):
            if self._belief_terminal(belief):
                break
            step = self._stream.fork(f"{node.label}/ro{t}")
            gen = step.gen
            action = self.actions[self._move_action_indices[int(gen.integers(len(self._move_action_indices)))]]
            observation = sample_observation(belief, action, self.model, gen)
            try:
                pf = pf_update(belief, action, observation, self.model, gen)
            except DegeneratePosteriorError:
                break  # truncate the rollout at the degenerate step
            lower, upper, cache = self._rollout_bounds(pf, action, f"{node.label}/ro{t}")
            disc = cfg.gamma**t
            r_sum += disc * pf.r_x
            low_sum += disc * lower
            up_sum += disc * upper
            if cache is not None:
                entries.append(RolloutEntry(cache, t, depth - 1 - t))
            belief = pf.posterior
        record = RolloutRecord(entries, cfg.gamma) if entries else None
        return RolloutOutcome(r_sum, low_sum, up_sum, record)

    def _check_accounting(self, node: BeliefNode) -> None:
        expected = (0 if node.entry is None else 1) + sum(ha.visits for ha in node.actions)
        if node.visits != expected:
            raise InternalConsistencyError(
                f"visit accounting broken at {node.label}: N={node.visits}, expected {expected}"
            )

    # -- final-selection helper shared by both planners -------------------

    def _visited_actions(self, root: BeliefNode) -> list[BeliefActionNode]:
        self._ensure_actions(root)
        visited = [ha for ha in root.actions if ha.visits > 0]
        if not visited:
            raise InternalConsistencyError("no action was ever visited at the root")
        return visited
