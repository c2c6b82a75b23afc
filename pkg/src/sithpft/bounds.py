"""Differential-entropy reward estimation over particle beliefs, plus
incrementally refinable lower/upper bounds on it.

The estimator needs the consecutive beliefs, the action and the observation;
its cost is Theta(m * t_obs + m^2 * t_mot) where the m^2 comes from the
transition-density double sum. The bounds replace part of that double sum
with index subsets A_k (columns: prior particles) and A_k1 (rows: posterior
particles). A discrete level s in {1..M} sets the subset sizes; refining
promotes the level by appending indices from a fixed label-derived
permutation and evaluates only the transition densities that are new, so
reaching the top level costs exactly one full estimator evaluation in total
and no (row, column) pair is ever evaluated twice.

Bookkeeping invariant behind the no-recompute guarantee: promoting a column
j evaluates it against rows not yet promoted (promoted rows already hold
their full row from their own promotion, stored in _row_rest); promoting a
row i evaluates it only against columns not yet promoted. Every (i, j) pair
is therefore evaluated by exactly one of the two events, whichever fires
first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Action, GenerativeModel, label_permutation
from .errors import AlreadyConvergedError, DegenerateEntropyError, UnsupportedModelError
from .filtering import PFUpdateResult

LOG_FLOOR = 1e-300  # density products below this are clamped before log


@dataclass(frozen=True)
class BoundsPair:
    """Lower/upper bracket on the minus-entropy reward of one transition."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower <= self.upper + 1e-9):
            raise ValueError(f"bounds inverted: {self.lower} > {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def max_transition_density(model: GenerativeModel, action: Action) -> float:
    """Finite supremum of P_T(x'|x,a) over all state pairs."""
    try:
        bound = model.transition_density_bound(action)
    except NotImplementedError as exc:
        raise UnsupportedModelError("model provides no transition density bound") from exc
    bound = float(bound)
    if not math.isfinite(bound) or bound <= 0.0:
        raise UnsupportedModelError(f"transition density bound must be finite and positive, got {bound}")
    return bound


def _fsum(values) -> float:
    return math.fsum(values.tolist() if isinstance(values, np.ndarray) else values)


def boers_minus_entropy(
    prior, action: Action, observation: np.ndarray, posterior, model: GenerativeModel, clamp: bool = False
) -> float:
    """Minus-entropy reward of (b, a, z, b'), evaluated in full.

    prior must be the uniform-weight resampled set actually propagated and
    posterior the reweighted result (see pf_update). With clamp=False a
    zero log argument with positive posterior weight raises
    DegenerateEntropyError; planners pass clamp=True to floor such products
    instead, keeping a simulation alive.
    """
    lik = np.asarray(model.observation_density(observation, posterior.particles), dtype=float)
    mat = np.asarray(model.transition_density_block(posterior.particles, prior.particles, action), dtype=float)
    inner = mat @ prior.weights
    mix = _fsum(lik * prior.weights)
    products = lik * inner
    if not clamp:
        if mix <= 0.0 or np.any((products <= 0.0) & (posterior.weights > 0.0)):
            raise DegenerateEntropyError("zero density product inside entropy log")
    term_a = -math.log(max(mix, LOG_FLOOR))
    term_b = _fsum(posterior.weights * np.log(np.maximum(products, LOG_FLOOR)))
    return term_a + term_b


class SimplificationCache:
    """Mutable bound state for one (b, a, z, b') transition.

    Owns the index schedule, the partial/full transition sums and the cached
    transition-density rows needed to refine without recomputation. Single
    owner (the belief node created from the transition); never shared.

    Promoted rows are stored per promotion event as one (rows, block,
    start_cut) triple; both the stored columns and the later column
    promotions follow the same permutation order, so folding a stored row
    segment into the partial sums is a contiguous slice.
    """

    __slots__ = (
        "label",
        "m",
        "levels",
        "level",
        "action",
        "perm_k",
        "perm_k1",
        "x_k",
        "w_k",
        "x_k1",
        "w_k1",
        "obs_lik",
        "const",
        "term_a",
        "trans_partial",
        "trans_full",
        "in_k1",
        "_row_events",
        "lower",
        "upper",
        "degenerate",
        "pt_evals",
    )

    def __init__(self, pf_result: PFUpdateResult, model: GenerativeModel, action: Action, levels: int, label: str):
        prior = pf_result.prior_resampled
        posterior = pf_result.posterior
        self.label = label
        self.m = prior.num_particles
        self.levels = int(levels)
        self.level = 1
        self.action = action
        gen = label_permutation(label, self.m * 2, raw=True)
        self.perm_k = gen.permutation(self.m)
        self.perm_k1 = gen.permutation(self.m)
        self.x_k = prior.particles
        self.w_k = prior.weights
        self.x_k1 = posterior.particles
        self.w_k1 = posterior.weights
        self.obs_lik = np.asarray(pf_result.obs_likelihoods, dtype=float)
        self.const = max_transition_density(model, action)
        self.term_a = -math.log(max(float(self.obs_lik @ self.w_k), LOG_FLOOR))
        self.trans_partial = np.zeros(self.m)
        self.trans_full = np.zeros(self.m)
        self.in_k1 = np.zeros(self.m, dtype=bool)
        # promoted-row storage: (row indices, density block over perm_k[start:], start)
        self._row_events: list[tuple[np.ndarray, np.ndarray, int]] = []
        self.degenerate = False
        self.pt_evals = 0

        cut = self._cut(1)
        self._promote_columns(model, 0, cut)
        self._promote_rows(model, self.perm_k1[:cut], cut)
        self._recompute_bounds()

    def _cut(self, level: int) -> int:
        # subset size schedule m^s = ceil(s*m/M); full set at the top level
        return math.ceil(level * self.m / self.levels)

    @property
    def bounds(self) -> BoundsPair:
        return BoundsPair(self.lower, self.upper)

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def _eval_block(self, model: GenerativeModel, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        block = np.asarray(
            model.transition_density_block(self.x_k1[rows], self.x_k[cols], self.action), dtype=float
        ).reshape(len(rows), len(cols))
        self.pt_evals += block.size
        return block

    def _promote_columns(self, model: GenerativeModel, old_cut: int, cut: int) -> None:
        new_j = self.perm_k[old_cut:cut]
        if len(new_j) == 0:
            return
        w_new = self.w_k[new_j]
        fresh = np.flatnonzero(~self.in_k1)
        if len(fresh):
            block = self._eval_block(model, fresh, new_j)
            self.trans_partial[fresh] += block @ w_new
        for rows, stored, start in self._row_events:
            # stored columns run over perm_k[start:]; the new ones are a slice
            self.trans_partial[rows] += stored[:, old_cut - start : cut - start] @ w_new

    def _promote_rows(self, model: GenerativeModel, new_i: np.ndarray, cut: int) -> None:
        if len(new_i) == 0:
            return
        rest_j = self.perm_k[cut:]
        if len(rest_j):
            block = self._eval_block(model, new_i, rest_j)
            self._row_events.append((new_i, block, cut))
            self.trans_full[new_i] = self.trans_partial[new_i] + block @ self.w_k[rest_j]
        else:
            self.trans_full[new_i] = self.trans_partial[new_i]
        self.in_k1[new_i] = True

    def _recompute_bounds(self) -> None:
        low_products = self.obs_lik * self.trans_partial
        if np.any((low_products < LOG_FLOOR) & (self.w_k1 > 0)):
            self.degenerate = True
        self.lower = self.term_a + float(self.w_k1 @ np.log(np.maximum(low_products, LOG_FLOOR)))
        if self.level >= self.levels:
            # both expressions coincide mathematically at the full sets; pin
            # them to one value so collapsed gaps are exactly zero
            self.upper = self.lower
        else:
            up_inner = np.where(self.in_k1, self.obs_lik * self.trans_full, self.const * self.obs_lik)
            if np.any((up_inner < LOG_FLOOR) & (self.w_k1 > 0)):
                self.degenerate = True
            self.upper = self.term_a + float(self.w_k1 @ np.log(np.maximum(up_inner, LOG_FLOOR)))

    def refine(self, model: GenerativeModel) -> BoundsPair:
        """Promote the simplification level by one and tighten the bounds."""
        if self.level >= self.levels:
            raise AlreadyConvergedError(f"cache already at level {self.level}")
        old_cut = self._cut(self.level)
        self.level += 1
        cut = self._cut(self.level)
        self._promote_columns(model, old_cut, cut)
        self._promote_rows(model, self.perm_k1[old_cut:cut], cut)
        self._recompute_bounds()
        if self.level >= self.levels:
            self._row_events = []  # nothing left to refine; drop the O(m^2) row storage
        return self.bounds

    def index_sets(self) -> tuple[np.ndarray, np.ndarray]:
        """Current (A_k, A_k1) index arrays, in promotion order."""
        cut = self._cut(self.level)
        return self.perm_k[:cut].copy(), self.perm_k1[:cut].copy()


def init_cache(
    pf_result: PFUpdateResult, model: GenerativeModel, action: Action, levels: int, label: str = "cache"
) -> tuple[SimplificationCache, BoundsPair]:
    """Build a level-1 cache for a fresh transition and return its bounds."""
    cache = SimplificationCache(pf_result, model, action, levels, label)
    return cache, cache.bounds


def refine(cache: SimplificationCache, model: GenerativeModel) -> BoundsPair:
    """Tighten a cache by one level (see SimplificationCache.refine)."""
    return cache.refine(model)
