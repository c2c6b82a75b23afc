"""2D continuous Light Dark environment.

The agent moves in the plane toward the origin; a beacon makes observations
near it nearly noiseless (observation covariance scales with the squared
beacon distance, clamped at 1), so detouring toward the beacon buys
localization. A terminal Null action pays +200 inside the goal radius and
-200 outside. None of the numeric defaults below (step length, radius,
sigmas, start, beacon, lam) are canonical; they are config-overridable
choices under which the beacon detour is worth taking.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import GenerativeModel, ParticleBelief

NULL_ACTION = "null"

# relative floor on the observation covariance factor; min{1, dist^2} hits
# exactly 0 at the beacon, which would make the density degenerate
COV_FLOOR = 1e-4


@dataclass
class LightDarkConfig:
    beacon: tuple[float, float] = (5.0, 0.0)
    goal_radius: float = 1.0
    goal_reward: float = 200.0
    fail_reward: float = -200.0
    sigma_transition: float = 0.1
    sigma_observation: float = 1.0
    sigma_initial: float = 2.0
    start_mean: tuple[float, float] = (5.0, 5.0)
    step_length: float = 1.0

    def __post_init__(self):
        if self.goal_radius <= 0:
            raise ValueError("goal radius must be positive")
        for s in (self.sigma_transition, self.sigma_observation, self.sigma_initial):
            if s <= 0:
                raise ValueError("sigmas must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "LightDarkConfig":
        kwargs = dict(data)
        for key in ("beacon", "start_mean"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class LightDarkAction:
    """One of eight unit-spaced move directions, or the terminal Null."""

    name: str
    delta: np.ndarray | None  # None marks the terminal action

    def __repr__(self):
        return f"LightDarkAction({self.name})"


class LightDarkModel(GenerativeModel):
    """Gaussian motion/observation model with beacon-modulated noise."""

    state_dim = 2

    def __init__(self, cfg: LightDarkConfig | None = None):
        self.cfg = cfg or LightDarkConfig()
        self._beacon = np.asarray(self.cfg.beacon, dtype=float)
        deltas = [
            self.cfg.step_length * np.array([math.cos(k * math.pi / 4.0), math.sin(k * math.pi / 4.0)])
            for k in range(8)
        ]
        names = ["e", "ne", "n", "nw", "w", "sw", "s", "se"]
        self._actions = [LightDarkAction(n, d) for n, d in zip(names, deltas)]
        self._actions.append(LightDarkAction(NULL_ACTION, None))

    def actions(self):
        return self._actions

    def is_terminal_action(self, action: LightDarkAction) -> bool:
        return action.delta is None

    def transition_sample(self, x, action, rng):
        x = np.asarray(x, dtype=float)
        if action.delta is None:
            return x.copy()
        noise = rng.standard_normal(x.shape) * self.cfg.sigma_transition
        return x + action.delta + noise

    def transition_density(self, x_next, x_prev, action):
        x_next = np.asarray(x_next, dtype=float)
        x_prev = np.asarray(x_prev, dtype=float)
        mean = x_prev if action.delta is None else x_prev + action.delta
        var = self.cfg.sigma_transition**2
        sq = np.sum((x_next - mean) ** 2, axis=-1)
        return np.exp(-0.5 * sq / var) / (2.0 * math.pi * var)

    def transition_density_block(self, x_next, x_prev, action):
        # ||a - b||^2 = |a|^2 + |b|^2 - 2 a.b keeps the pair sweep inside one
        # matmul instead of large broadcast temporaries
        x_next = np.asarray(x_next, dtype=float)
        mean = np.asarray(x_prev, dtype=float)
        if action.delta is not None:
            mean = mean + action.delta
        var = self.cfg.sigma_transition**2
        sq = (
            np.sum(x_next**2, axis=1)[:, None]
            + np.sum(mean**2, axis=1)[None, :]
            - 2.0 * (x_next @ mean.T)
        )
        np.maximum(sq, 0.0, out=sq)
        sq *= -0.5 / var
        np.exp(sq, out=sq)
        sq /= 2.0 * math.pi * var
        return sq

    def transition_density_bound(self, action) -> float:
        return 1.0 / (2.0 * math.pi * self.cfg.sigma_transition**2)

    def _obs_variance(self, x) -> np.ndarray:
        dist_sq = np.sum((np.asarray(x, dtype=float) - self._beacon) ** 2, axis=-1)
        factor = np.clip(dist_sq, COV_FLOOR, 1.0)
        return factor * self.cfg.sigma_observation**2

    def observation_sample(self, x, rng):
        x = np.asarray(x, dtype=float)
        sd = np.sqrt(self._obs_variance(x))
        return x + rng.standard_normal(x.shape) * sd

    def observation_density(self, z, x):
        x = np.asarray(x, dtype=float)
        var = self._obs_variance(x)
        sq = np.sum((np.asarray(z, dtype=float) - x) ** 2, axis=-1)
        return np.exp(-0.5 * sq / var) / (2.0 * math.pi * var)

    def state_reward(self, x, action):
        x = np.asarray(x, dtype=float)
        if action.delta is None:
            inside = np.sqrt(np.sum(x**2, axis=-1)) <= self.cfg.goal_radius
            return np.where(inside, self.cfg.goal_reward, self.cfg.fail_reward)
        # penalize the post-move distance to the goal at the origin
        return -np.sqrt(np.sum((x + action.delta) ** 2, axis=-1))

    def initial_belief(self, m: int, rng) -> ParticleBelief:
        particles = np.asarray(self.cfg.start_mean, dtype=float) + rng.standard_normal((m, 2)) * self.cfg.sigma_initial
        return ParticleBelief(particles, np.full(m, 1.0 / m))

    def sample_initial_state(self, rng) -> np.ndarray:
        return np.asarray(self.cfg.start_mean, dtype=float) + rng.standard_normal(2) * self.cfg.sigma_initial


@dataclass
class TrajectoryStep:
    step: int
    state: tuple[float, float]
    belief_mean: tuple[float, float]
    action: str
    reward: float


def write_trajectory_csv(path, steps: list[TrajectoryStep]) -> None:
    """Dump an executed trajectory as step,x1,x2,mean1,mean2,action,reward."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "x1", "x2", "mean1", "mean2", "action", "reward"])
        for s in steps:
            writer.writerow(
                [s.step, s.state[0], s.state[1], s.belief_mean[0], s.belief_mean[1], s.action, s.reward]
            )
