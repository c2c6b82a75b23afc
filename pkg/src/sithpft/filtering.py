"""Particle-filter belief update used by both planners.

The update resamples first (systematic, one uniform draw), then propagates
and reweights, so the propagated particle set always carries uniform
weights. The entropy-bound machinery depends on that convention: it
consumes the pre-propagation resampled set (uniform weights) and the
posterior, plus the per-particle observation likelihoods computed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Action, GenerativeModel, ParticleBelief, expected_state_reward
from .errors import DegeneratePosteriorError


def _belief_unchecked(particles: np.ndarray, weights: np.ndarray) -> ParticleBelief:
    # internal hot path: inputs are constructed normalized, skip validation
    belief = object.__new__(ParticleBelief)
    belief.particles = particles
    belief.weights = weights
    return belief


@dataclass
class PFUpdateResult:
    """Output of one belief update.

    posterior: reweighted propagated particles; prior_resampled: the
    uniform-weight set that was propagated; r_x: belief-expected state
    reward of the input belief; obs_likelihoods: P_Z(z|x'_i) for every
    propagated particle, cached so downstream bound code never re-evaluates
    them.
    """

    posterior: ParticleBelief
    prior_resampled: ParticleBelief
    r_x: float
    obs_likelihoods: np.ndarray


def systematic_resample_indices(weights: np.ndarray, u: float) -> np.ndarray:
    """Systematic (low-variance) resampling indices from one uniform draw."""
    m = weights.shape[0]
    positions = (np.arange(m) + u) / m
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard against round-off shortfall
    return np.searchsorted(cumulative, positions, side="right").clip(0, m - 1)


def sample_observation(
    belief: ParticleBelief, action: Action, model: GenerativeModel, rng: np.random.Generator
) -> np.ndarray:
    """Draw one observation: particle ~ weights, propagate, then observe."""
    u = rng.random()
    cumulative = np.cumsum(belief.weights)
    cumulative[-1] = 1.0
    idx = int(np.searchsorted(cumulative, u, side="right").clip(0, belief.num_particles - 1))
    x_next = model.transition_sample(belief.particles[idx], action, rng)
    return model.observation_sample(np.asarray(x_next, dtype=float), rng)


def pf_update(
    belief: ParticleBelief,
    action: Action,
    observation: np.ndarray,
    model: GenerativeModel,
    rng: np.random.Generator,
) -> PFUpdateResult:
    """One generative belief update: resample, propagate, reweight.

    Raises DegeneratePosteriorError when the observation has zero
    likelihood under every propagated particle; callers abort that
    simulation branch rather than crash the session.
    """
    m = belief.num_particles
    r_x = expected_state_reward(belief, action, model)

    indices = systematic_resample_indices(belief.weights, rng.random())
    resampled = belief.particles[indices]
    uniform = np.full(m, 1.0 / m)

    propagated = model.transition_sample(resampled, action, rng)
    likelihoods = np.asarray(model.observation_density(observation, propagated), dtype=float)

    total = float(likelihoods.sum())
    if total <= 0.0 or not np.isfinite(total):
        raise DegeneratePosteriorError("observation impossible under all particles")

    posterior = _belief_unchecked(propagated, likelihoods / total)
    prior = _belief_unchecked(resampled, uniform)
    return PFUpdateResult(posterior=posterior, prior_resampled=prior, r_x=r_x, obs_likelihoods=likelihoods)
