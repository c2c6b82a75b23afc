"""Core POMDP abstractions: particle beliefs, generative models, planner
configuration, and deterministic label-forked random streams.

The random-stream design is the backbone of cross-planner reproducibility:
every sampling site in either planner draws from a stream forked by a label
describing the tree position, never from a stream whose state depends on how
much other code has consumed. Bound computations are required to consume no
randomness at all, so two planners visiting the same tree positions see
bit-identical draws.
"""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateWeightsError, ModelEvaluationError

Action = Any

_WEIGHT_SUM_TOL = 1e-9


def normalize_weights(raw) -> np.ndarray:
    """Scale a nonnegative weight vector to sum to one.

    Raises DegenerateWeightsError if any entry is negative or the total
    mass is zero (nothing to normalize).
    """
    w = np.asarray(raw, dtype=float)
    if w.size == 0:
        raise DegenerateWeightsError("empty weight vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DegenerateWeightsError("weights must be finite and nonnegative")
    total = float(w.sum())
    if total <= 0.0:
        raise DegenerateWeightsError("all weights are zero")
    return w / total


@dataclass
class ParticleBelief:
    """Belief over a continuous state, as m weighted state particles.

    particles: (m, d) array of states; weights: (m,) nonnegative, summing
    to one. Arrays are owned by the belief and treated as immutable.
    """

    particles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.particles.shape[0] != self.weights.shape[0]:
            raise ValueError("particle/weight count mismatch")
        if self.weights.shape[0] == 0:
            raise ValueError("belief needs at least one particle")
        if np.any(self.weights < 0):
            raise DegenerateWeightsError("negative belief weight")
        if abs(float(self.weights.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise DegenerateWeightsError("belief weights do not sum to 1")

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.particles


class GenerativeModel(abc.ABC):
    """Problem definition: samplers, densities, rewards, terminal predicates.

    Density and reward methods must be vectorized: state arguments may carry
    arbitrary leading batch dimensions that broadcast against each other, with
    the last axis the state dimension. Sampler methods take an (m, d) array (or a
    single (d,) state) and a numpy Generator, and must consume a number of
    draws that depends only on the input shape.
    """

    state_dim: int = 1

    @abc.abstractmethod
    def actions(self) -> Sequence[Action]:
        """Finite action set, in a fixed canonical order."""

    @abc.abstractmethod
    def is_terminal_action(self, action: Action) -> bool:
        """True if executing the action ends the episode."""

    def is_terminal_state(self, x: np.ndarray) -> np.ndarray:
        """Elementwise terminal predicate over states; default: none."""
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1], dtype=bool)

    @abc.abstractmethod
    def transition_sample(self, x: np.ndarray, action: Action, rng: np.random.Generator) -> np.ndarray:
        """Draw x' ~ P_T(. | x, a) for each input state."""

    @abc.abstractmethod
    def transition_density(self, x_next: np.ndarray, x_prev: np.ndarray, action: Action) -> np.ndarray:
        """Evaluate P_T(x_next | x_prev, a), broadcasting leading dims."""

    def transition_density_block(self, x_next: np.ndarray, x_prev: np.ndarray, action: Action) -> np.ndarray:
        """All-pairs densities: (r, d) x (c, d) -> (r, c). Override where a
        faster kernel than pointwise broadcasting exists."""
        return self.transition_density(x_next[:, None, :], x_prev[None, :, :], action)

    @abc.abstractmethod
    def observation_sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw z ~ P_Z(. | x) for a single state x."""

    @abc.abstractmethod
    def observation_density(self, z: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate P_Z(z | x) for each state in x."""

    @abc.abstractmethod
    def state_reward(self, x: np.ndarray, action: Action) -> np.ndarray:
        """Per-state reward r(x, a), vectorized over particles."""

    def transition_density_bound(self, action: Action) -> float:
        """Finite sup over (x, x') of P_T(x'|x,a); override where known."""
        raise NotImplementedError


def expected_state_reward(belief: ParticleBelief, action: Action, model: GenerativeModel) -> float:
    """Belief-expected state reward: sum_i w_i * r(x_i, a)."""
    r = np.asarray(model.state_reward(belief.particles, action), dtype=float)
    if not np.all(np.isfinite(r)):
        raise ModelEvaluationError(f"non-finite state reward for action {action!r}")
    return float(belief.weights @ r)


@dataclass
class PlannerConfig:
    """Knobs shared by both planners.

    m: particle count; d_max: planning depth; n_iter: simulations per
    planning session; c: UCB exploration constant; gamma: discount; lam:
    information-reward weight; k_o/alpha_o: observation progressive
    widening; levels: number of simplification levels M; seed: 64-bit
    stream seed.
    """

    m: int = 50
    d_max: int = 30
    n_iter: int = 200
    c: float = 100.0
    gamma: float = 0.95
    lam: float = 60.0
    k_o: float = 2.0
    alpha_o: float = 0.1
    levels: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.d_max < 1 or self.n_iter < 1 or self.levels < 1:
            raise ValueError("m, d_max, n_iter and levels must all be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")

    _KEY_MAP = {
        "m": "m",
        "d_max": "d_max",
        "n_iter": "n_iter",
        "c": "c",
        "gamma": "gamma",
        "lambda": "lam",
        "k_o": "k_o",
        "alpha_o": "alpha_o",
        "M": "levels",
        "seed": "seed",
    }

    @classmethod
    def from_dict(cls, data: dict) -> "PlannerConfig":
        """Build from the documented config-file keys
        (m, d_max, n_iter, c, gamma, lambda, k_o, alpha_o, M, seed)."""
        kwargs = {}
        for key, value in data.items():
            if key not in cls._KEY_MAP:
                raise KeyError(f"unknown planner config key: {key}")
            kwargs[cls._KEY_MAP[key]] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        inv = {v: k for k, v in self._KEY_MAP.items()}
        return {inv[f]: getattr(self, f) for f in inv}

    def replace(self, **changes) -> "PlannerConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return PlannerConfig(**d)


class SeededStream:
    """Deterministic random stream with fork-by-label.

    A stream is identified by a key; forking hashes (key, label) into a
    child key, so the fork result depends only on the parent's identity and
    the label, never on how many draws anyone has consumed. Identical
    (seed, label-sequence) pairs therefore yield identical streams in
    different processes, planners, and call orders.
    """

    __slots__ = ("key", "_gen")

    def __init__(self, key: bytes):
        self.key = key
        self._gen = None

    @classmethod
    def from_seed(cls, seed: int) -> "SeededStream":
        return cls(int(seed).to_bytes(8, "little", signed=True))

    def fork(self, label: str) -> "SeededStream":
        digest = hashlib.sha256(self.key + b"\x1f" + label.encode("utf-8")).digest()
        return SeededStream(digest)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            entropy = int.from_bytes(hashlib.sha256(self.key).digest(), "little")
            self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
        return self._gen


def label_permutation(label: str, n: int, raw: bool = False):
    """Fixed pseudorandom permutation of range(n) derived from a label.

    Used for simplification-level index schedules; independent of every
    SeededStream so bound work consumes no shared randomness. With
    raw=True the label-seeded generator itself is returned so a caller can
    draw several permutations from one hash.
    """
    entropy = int.from_bytes(hashlib.sha256(b"perm\x1f" + label.encode("utf-8")).digest(), "little")
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
    if raw:
        return gen
    return gen.permutation(n)
