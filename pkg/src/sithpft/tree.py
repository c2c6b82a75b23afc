"""Belief-tree node types shared by both planners, plus canonical
serialization for digesting and diffing trees.

Visit-count convention (asserted after every simulation): a non-root belief
node counts its creation/rollout visit, so N(node) = 1 + sum of child
action-node visits once expanded; the root has no creation visit and
satisfies N(root) = sum of action-node visits. Belief nodes entered at
depth 0 still count the pass even though nothing is simulated below.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Optional

import numpy as np


class BeliefActionNode:
    """Per-action statistics at a belief node: N(ha), running mean of the
    state-reward returns, running means of the entropy-return bounds (equal
    in the baseline), and the expanded observation branches C(ha)."""

    __slots__ = ("index", "action", "terminal", "visits", "q_state", "lower", "upper", "children", "aborted")

    def __init__(self, index: int, action, terminal: bool):
        self.index = index
        self.action = action
        self.terminal = terminal
        self.visits = 0
        self.q_state = 0.0
        self.lower = 0.0
        self.upper = 0.0
        self.children: list[ChildEntry] = []
        self.aborted = 0  # simulations that died in a degenerate posterior

    @property
    def gap(self) -> float:
        return self.upper - self.lower


class ChildEntry:
    """One expanded observation branch: the (r_x, bounds, belief, z) tuple.

    In the simplified planner `cache` carries the refinable bound state and
    lower/upper read through to it; the baseline stores the exact entropy
    reward as a collapsed pair.
    """

    __slots__ = ("r_x", "node", "observation", "cache", "_value")

    def __init__(self, r_x: float, node: "BeliefNode", observation, cache=None, value: float = 0.0):
        self.r_x = r_x
        self.node = node
        self.observation = np.asarray(observation, dtype=float)
        self.cache = cache
        self._value = value

    @property
    def lower(self) -> float:
        return self.cache.lower if self.cache is not None else self._value

    @property
    def upper(self) -> float:
        return self.cache.upper if self.cache is not None else self._value


class RolloutEntry:
    """One rollout step's refinable bound state.

    disc_exp is the step's discount exponent within the rollout return;
    depth is the belief depth the step landed on (leaf depth is 0)."""

    __slots__ = ("cache", "disc_exp", "depth")

    def __init__(self, cache, disc_exp: int, depth: int):
        self.cache = cache
        self.disc_exp = disc_exp
        self.depth = depth


class RolloutRecord:
    """Refinable per-step bound records of one rollout, with the discounted
    (L, U) sums it contributes to its node's creation simulation."""

    __slots__ = ("entries", "gamma", "lower_sum", "upper_sum", "refinable")

    def __init__(self, entries: list[RolloutEntry], gamma: float):
        self.entries = entries
        self.gamma = gamma
        self.recompute()

    def recompute(self) -> None:
        # recomputed from scratch (not incrementally) so fully collapsed
        # records give bit-equal sums and an exactly zero gap
        self.lower_sum = math.fsum(self.gamma**e.disc_exp * e.cache.lower for e in self.entries)
        self.upper_sum = math.fsum(self.gamma**e.disc_exp * e.cache.upper for e in self.entries)
        self.refinable = any(e.cache.level < e.cache.levels for e in self.entries)


class BeliefNode:
    """A belief-tree node: the belief, its visit count, remaining depth,
    per-action children, and (simplified planner only) the rollout record
    of its creation simulation."""

    __slots__ = ("belief", "depth", "label", "visits", "actions", "entry", "rollout")

    def __init__(self, belief, depth: int, label: str, visits: int = 0):
        self.belief = belief
        self.depth = depth
        self.label = label
        self.visits = visits
        self.actions: Optional[list[BeliefActionNode]] = None
        self.entry: Optional[ChildEntry] = None  # creation tuple in the parent's C(ha)
        self.rollout: Optional[RolloutRecord] = None


def tree_to_dict(root: BeliefNode) -> dict:
    """Canonical nested-dict snapshot: action ids, observation bytes, and
    visitation counts, children in creation order."""

    def node_dict(node: BeliefNode) -> dict:
        out = {"n": node.visits, "actions": []}
        for ha in node.actions or []:
            entry = {
                "a": ha.index,
                "n": ha.visits,
                "children": [
                    {"obs": c.observation.astype(np.float64).tobytes().hex(), **node_dict(c.node)}
                    for c in ha.children
                ],
            }
            out["actions"].append(entry)
        return out

    return node_dict(root)


def canonical_tree_bytes(tree: BeliefNode | dict) -> bytes:
    snapshot = tree_to_dict(tree) if isinstance(tree, BeliefNode) else tree
    return json.dumps(snapshot, sort_keys=True, separators=(",", ":")).encode("utf-8")


def tree_digest(tree: BeliefNode | dict) -> str:
    """SHA-256 hex digest of the canonical tree snapshot."""
    return hashlib.sha256(canonical_tree_bytes(tree)).hexdigest()


def tree_size(root: BeliefNode) -> int:
    """Number of belief nodes in the tree."""
    count = 1
    for ha in root.actions or []:
        for c in ha.children:
            count += tree_size(c.node)
    return count
