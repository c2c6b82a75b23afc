"""SITH-PFT: the baseline's control flow with exact entropy rewards replaced
by refinable bounds, plus the action-selection / resimplification loop that
keeps its tree and decisions identical to the baseline's.

Action selection marks the candidate maximizing the lower UCB; if any
sibling's upper UCB exceeds the candidate's lower UCB the choice is
ambiguous and the widest-gap sibling's subtree is resimplified until the
overlap clears. The guided strategy refines only descendants whose
discounted bound width beats the triggering node's mean gap per depth;
because that threshold test can reject every descendant (a depth-1 trigger
with one child fails it for any discount <= 1), a pass that makes no
progress escalates once to the brute-force pass, which promotes every
refinable descendant one level and therefore always progresses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import init_cache
from .common import PlanReport, TreeSearchPlanner, ucb_bounds
from .core import GenerativeModel, ParticleBelief, PlannerConfig
from .errors import InternalConsistencyError
from .tree import BeliefActionNode, BeliefNode


@dataclass(frozen=True)
class GapQuery:
    """Resimplification trigger context: the belief-action node whose bound
    gap forced it, that gap (frozen at trigger time), and the trigger's
    depth."""

    node: BeliefActionNode
    gap: float
    depth: int


def refine_condition(upper: float, lower: float, d: int, d_prime: int, gap: float, gamma: float) -> bool:
    """Refine a node's immediate bounds iff its discounted width exceeds the
    triggering node's mean gap per depth: gamma^(d-d') * (u-l) > g/d."""
    return gamma ** (d - d_prime) * (upper - lower) > gap / d


def reconstruct_bounds(ha: BeliefActionNode, gamma: float) -> None:
    """Recompute the entropy-return bound means of `ha` from current child
    state: exactly the weighted mean of per-simulation (L, U) returns with
    every immediate bound read at its current refinement level.

    Per child observation branch, every pass contributes the branch's
    immediate bound once; the creation pass adds the discounted rollout
    sums and each reuse pass adds a discounted grandchild return, whose sum
    per grandchild action is visits * bound-mean."""
    if ha.terminal or ha.visits == 0:
        ha.lower = 0.0
        ha.upper = 0.0
        return
    passes = ha.aborted
    total_low = 0.0
    total_up = 0.0
    for entry in ha.children:
        child = entry.node
        passes += child.visits
        sub_low = sub_up = 0.0
        if child.rollout is not None:
            sub_low += child.rollout.lower_sum
            sub_up += child.rollout.upper_sum
        if child.actions is not None:
            grand = sum(a.visits for a in child.actions)
            if child.visits != 1 + grand:
                raise InternalConsistencyError(
                    f"node {child.label}: N={child.visits} but 1+sum(N(ha'))={1 + grand}"
                )
            for grand_ha in child.actions:
                if grand_ha.visits:
                    sub_low += grand_ha.visits * grand_ha.lower
                    sub_up += grand_ha.visits * grand_ha.upper
        total_low += child.visits * entry.lower + gamma * sub_low
        total_up += child.visits * entry.upper + gamma * sub_up
    if passes != ha.visits:
        raise InternalConsistencyError(f"action node visits {ha.visits} != child passes {passes}")
    ha.lower = total_low / ha.visits
    ha.upper = total_up / ha.visits


def select_best(node: BeliefNode, c: float, lam: float) -> tuple[bool, int, float]:
    """One disambiguation attempt at `node`.

    Returns (True, candidate index, 0.0) when the lower UCB of the
    candidate clears every sibling's upper UCB. Otherwise returns (False,
    index to resimplify, that node's bound gap): the overlapping sibling
    with the widest gap, or the candidate itself when every overlapping
    sibling has a zero gap (then the reported gap is zero, which makes the
    guided strategy refine everything still refinable below)."""
    log_n = math.log(node.visits)
    visited = []
    lows = []
    ups = []
    for ha in node.actions:
        if ha.visits == 0:
            continue
        explore = c * math.sqrt(log_n / ha.visits)
        visited.append(ha)
        lows.append(ha.q_state + lam * ha.lower + explore)
        ups.append(ha.q_state + lam * ha.upper + explore)
    best = 0
    for k in range(1, len(visited)):
        if lows[k] > lows[best]:
            best = k
    status = True
    pick = visited[best]
    best_gap = 0.0
    candidate_low = lows[best]
    for k, ha in enumerate(visited):
        if k == best:
            continue
        if candidate_low < ups[k]:
            status = False
            gap = ha.upper - ha.lower
            if gap > best_gap:
                best_gap = gap
                pick = ha
    if status:
        return True, visited[best].index, 0.0
    return False, pick.index, best_gap


class SpecificStrategy:
    """Gap-guided resimplification: descend the max N(ha)*(UB-LB) branch,
    refine nodes passing the refine condition, and refine at most one
    rollout entry (the widest satisfying one) per visited belief node."""

    name = "specific"

    def run_pass(self, planner: "SithPftPlanner", ha: BeliefActionNode, query: GapQuery) -> None:
        # threshold precomputed per pass: refine node at depth d' iff
        # gamma^(d-d') * (u-l) > g/d, i.e. (u-l) > threshold[d']
        gap_over_d = query.gap / query.depth
        pows = planner.gamma_powers
        thresholds = [
            gap_over_d / pows[query.depth - dp] if pows[query.depth - dp] > 0.0 else math.inf
            for dp in range(query.depth + 1)
        ]
        for entry in ha.children:
            self._resimplify(planner, entry.node, thresholds)

    def _resimplify(self, planner: "SithPftPlanner", node: BeliefNode, thresholds: list[float]) -> None:
        best = None
        best_weight = 0.0
        for child_ha in node.actions or []:
            weight = child_ha.visits * (child_ha.upper - child_ha.lower)
            if weight > best_weight:
                best_weight = weight
                best = child_ha
        # a zero weighted gap means that subtree is fully collapsed; the
        # descent would refine nothing, so it is skipped
        if best is not None:
            for entry in best.children:
                self._resimplify(planner, entry.node, thresholds)
            reconstruct_bounds(best, planner.config.gamma)
        cache = node.entry.cache if node.entry is not None else None
        if cache is not None and cache.level < cache.levels and cache.upper - cache.lower > thresholds[node.depth]:
            cache.refine(planner.model)
            planner.refine_promotions += 1
        self._resimplify_rollout(planner, node, thresholds)

    def _resimplify_rollout(self, planner: "SithPftPlanner", node: BeliefNode, thresholds: list[float]) -> None:
        record = node.rollout
        if record is None or not record.refinable:
            return
        best = None
        best_gap = 0.0
        for entry in record.entries:
            cache = entry.cache
            if cache.level >= cache.levels:
                continue
            gap = cache.upper - cache.lower
            if gap > best_gap and gap > thresholds[entry.depth]:
                best_gap = gap
                best = entry
        if best is not None:
            best.cache.refine(planner.model)
            planner.refine_promotions += 1
            record.recompute()


class BruteForceStrategy:
    """Refine every descendant (tree and rollout entries) one level per
    pass; trivially converging and finite-time, and the escalation target
    when the guided pass stalls."""

    name = "brute-force"

    def run_pass(self, planner: "SithPftPlanner", ha: BeliefActionNode, query: GapQuery) -> None:
        for entry in ha.children:
            self._resimplify(planner, entry.node)

    def _resimplify(self, planner: "SithPftPlanner", node: BeliefNode) -> None:
        gamma = planner.config.gamma
        for child_ha in node.actions or []:
            if child_ha.children:
                for entry in child_ha.children:
                    self._resimplify(planner, entry.node)
                reconstruct_bounds(child_ha, gamma)
        cache = node.entry.cache if node.entry is not None else None
        if cache is not None and cache.level < cache.levels:
            cache.refine(planner.model)
            planner.refine_promotions += 1
        record = node.rollout
        if record is not None and record.refinable:
            for entry in record.entries:
                if entry.cache.level < entry.cache.levels:
                    entry.cache.refine(planner.model)
                    planner.refine_promotions += 1
            record.recompute()


class SithPftPlanner(TreeSearchPlanner):
    """Simplified planner: bounds at level 1 on node creation, bounded UCB
    action selection with on-demand resimplification, bottom-up bound
    reconstruction along refined paths."""

    name = "sith-pft"

    def __init__(self, model: GenerativeModel, config: PlannerConfig, strategy: str = "specific"):
        super().__init__(model, config)
        if strategy == "specific":
            self._strategy = SpecificStrategy()
        elif strategy == "brute-force":
            self._strategy = BruteForceStrategy()
            self.name = "sith-pft-brute"
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        self._brute = BruteForceStrategy()
        self._watermark = math.inf
        self.gamma_powers = [config.gamma**k for k in range(config.d_max + 2)]
        self.resimplify_passes = 0
        self.refine_promotions = 0
        self.brute_escalations = 0

    # -- hook implementations ---------------------------------------------

    def _begin_simulation(self) -> None:
        self._watermark = math.inf

    def _creation_bounds(self, pf, action, label: str):
        if self.config.lam == 0.0:
            return 0.0, 0.0, None  # no information reward: nothing to bound
        cache, pair = init_cache(pf, self.model, action, self.config.levels, label)
        return pair.lower, pair.upper, cache

    _rollout_bounds = _creation_bounds

    def _select_among_visited(self, node: BeliefNode) -> int:
        return self._action_selection(node, self.config.c)

    def _final_action_index(self, root: BeliefNode) -> int:
        self._visited_actions(root)  # sanity: at least one visited action
        return self._action_selection(root, 0.0)

    def _needs_reconstruction(self, depth: int) -> bool:
        return self._watermark < depth

    def _reconstruct(self, ha: BeliefActionNode) -> None:
        reconstruct_bounds(ha, self.config.gamma)

    # -- action selection with resimplification ----------------------------

    def _action_selection(self, node: BeliefNode, c: float) -> int:
        gamma = self.config.gamma
        cap = self.node_count * (self.config.d_max + 1) * self.config.levels + 16
        rounds = 0
        while True:
            status, index, gap = select_best(node, c, self.config.lam)
            if status:
                return index
            ha = node.actions[index]
            query = GapQuery(ha, gap, node.depth)
            prev_gap = ha.gap
            prev_promotions = self.refine_promotions
            self.resimplify_passes += 1
            self._strategy.run_pass(self, ha, query)
            reconstruct_bounds(ha, gamma)
            if self.refine_promotions == prev_promotions and not ha.gap < prev_gap:
                # the guided pass refined nothing and the gap is stuck;
                # promote every refinable descendant once instead
                self.brute_escalations += 1
                self._brute.run_pass(self, ha, GapQuery(ha, 0.0, node.depth))
                reconstruct_bounds(ha, gamma)
                if self.refine_promotions == prev_promotions and ha.gap > 0.0 and not ha.gap < prev_gap:
                    raise InternalConsistencyError(
                        f"resimplification stuck at {node.label} with gap {ha.gap}"
                    )
            self._watermark = min(self._watermark, node.depth)
            rounds += 1
            if rounds > cap:
                raise InternalConsistencyError(f"action selection exceeded {cap} rounds at {node.label}")

    # -- reporting ---------------------------------------------------------

    def _fill_report(self, report: PlanReport, root: BeliefNode) -> None:
        report.resimplify_passes = self.resimplify_passes
        report.refine_promotions = self.refine_promotions
        report.brute_escalations = self.brute_escalations
        histogram: dict[int, int] = {}

        def walk(node: BeliefNode) -> None:
            if node.entry is not None and node.entry.cache is not None:
                level = node.entry.cache.level
                histogram[level] = histogram.get(level, 0) + 1
            if node.rollout is not None:
                for entry in node.rollout.entries:
                    histogram[entry.cache.level] = histogram.get(entry.cache.level, 0) + 1
            for ha in node.actions or []:
                for child in ha.children:
                    walk(child.node)

        walk(root)
        report.cache_level_histogram = histogram


def plan(
    belief: ParticleBelief, config: PlannerConfig, model: GenerativeModel, strategy: str = "specific"
) -> tuple[object, PlanReport, BeliefNode]:
    """One-shot simplified-planner session."""
    return SithPftPlanner(model, config, strategy=strategy).plan(belief)
