"""Experiment harness: paired planner runs over Light Dark episodes, exact
consistency verification, timing aggregation, and result export.

A repetition is one episode realization: both planners face identical
initial beliefs, ground-truth states, observations, and per-session seeds.
After each planning session the chosen action (verified identical) is
executed against the hidden true state and both planners continue from the
same updated belief. Any tree or action mismatch is a correctness bug and
aborts the run with the divergence path, never a statistic.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .baseline import PftDpwPlanner
from .bounds import boers_minus_entropy
from .core import PlannerConfig, SeededStream
from .errors import PlanningError
from .filtering import pf_update, sample_observation
from .lightdark import LightDarkConfig, LightDarkModel, TrajectoryStep
from .sith import SithPftPlanner
from .tree import BeliefNode, tree_to_dict

BASELINE = "pft-dpw"
SIMPLIFIED = "sith-pft"


@dataclass
class ExperimentSpec:
    """Run matrix: (m, d, n_iter) rows x repetitions x planning sessions."""

    rows: list = field(default_factory=lambda: [(50, 30, 200)])
    sessions: int = 10
    repetitions: int = 25
    seed: int = 1
    planner: dict = field(default_factory=dict)  # PlannerConfig overrides (documented keys)
    lightdark: dict = field(default_factory=dict)  # LightDarkConfig overrides
    strategy: str = "specific"
    verify: bool = True

    def __post_init__(self):
        self.rows = [tuple(int(v) for v in row) for row in self.rows]
        for row in self.rows:
            if len(row) != 3:
                raise ValueError(f"row must be (m, d, n_iter), got {row}")
        base = dict(self.planner)
        base.pop("m", None), base.pop("d_max", None), base.pop("n_iter", None)
        for m, d, n in self.rows:
            PlannerConfig.from_dict({**base, "m": m, "d_max": d, "n_iter": n})  # validate early

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rows"] = [list(r) for r in self.rows]
        return d

    def config_for_row(self, row: tuple, seed: int) -> PlannerConfig:
        m, d, n = row
        data = dict(self.planner)
        data.update({"m": m, "d_max": d, "n_iter": n, "seed": seed})
        return PlannerConfig.from_dict(data)


def compare_trees(first, second) -> tuple[bool, str | None]:
    """Exact comparison of two tree snapshots (nodes or exported dicts).

    Returns (True, None) on equality, else (False, path) where path names
    the first divergent node in depth-first order."""
    a = tree_to_dict(first) if isinstance(first, BeliefNode) else first
    b = tree_to_dict(second) if isinstance(second, BeliefNode) else second

    def walk(x: dict, y: dict, path: str) -> str | None:
        if x["n"] != y["n"]:
            return f"{path}: N(h) {x['n']} != {y['n']}"
        if len(x["actions"]) != len(y["actions"]):
            return f"{path}: action fanout {len(x['actions'])} != {len(y['actions'])}"
        for ax, ay in zip(x["actions"], y["actions"]):
            apath = f"{path}/a{ax['a']}"
            if ax["a"] != ay["a"]:
                return f"{path}: action id {ax['a']} != {ay['a']}"
            if ax["n"] != ay["n"]:
                return f"{apath}: N(ha) {ax['n']} != {ay['n']}"
            if len(ax["children"]) != len(ay["children"]):
                return f"{apath}: |C(ha)| {len(ax['children'])} != {len(ay['children'])}"
            for ci, (cx, cy) in enumerate(zip(ax["children"], ay["children"])):
                cpath = f"{apath}/o{ci}"
                if cx["obs"] != cy["obs"]:
                    return f"{cpath}: observations differ"
                sub = walk(cx, cy, cpath)
                if sub is not None:
                    return sub
        return None

    divergence = walk(a, b, "root")
    return (divergence is None), divergence


@dataclass
class SessionRecord:
    row: list
    repetition: int
    session: int
    planner: str
    wall_time_s: float
    action_index: int
    consistent: bool | None
    resimplify_passes: int
    refine_promotions: int
    tree_digest: str


@dataclass
class RowSummary:
    row: list
    baseline_mean_s: float
    baseline_stderr_s: float
    simplified_mean_s: float
    simplified_stderr_s: float
    speedup: float
    consistent: bool
    sessions_run: int
    resimplify_passes_mean: float
    refine_promotions_mean: float


@dataclass
class RunReport:
    spec: dict
    summaries: list
    sessions: list

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "summaries": [asdict(s) for s in self.summaries],
            "sessions": [asdict(s) for s in self.sessions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            spec=data["spec"],
            summaries=[RowSummary(**s) for s in data["summaries"]],
            sessions=[SessionRecord(**s) for s in data["sessions"]],
        )


class ConsistencyFailure(PlanningError):
    """Paired planners diverged; carries the divergence path."""


@dataclass
class RepetitionResult:
    sessions: list
    trajectory: list  # executed TrajectoryStep records


def _derived_seed(stream: SeededStream, label: str) -> int:
    return int.from_bytes(stream.fork(label).key[:8], "little", signed=True)


def run_repetition(spec: ExperimentSpec, row_index: int, repetition: int) -> RepetitionResult:
    """Run one paired episode (both planners, all sessions) for one row."""
    row = spec.rows[row_index]
    model = LightDarkModel(LightDarkConfig.from_dict(spec.lightdark))
    rep_stream = SeededStream.from_seed(spec.seed).fork(f"row{row_index}/rep{repetition}")
    belief = model.initial_belief(row[0], rep_stream.fork("init").gen)
    true_state = model.sample_initial_state(rep_stream.fork("truth").gen)
    records: list[SessionRecord] = []
    trajectory: list[TrajectoryStep] = []
    baseline_first = repetition % 2 == 0  # alternate order to neutralize warm-cache bias

    for session in range(spec.sessions):
        config = spec.config_for_row(row, seed=_derived_seed(rep_stream, f"session{session}"))
        baseline = PftDpwPlanner(model, config)
        simplified = SithPftPlanner(model, config, strategy=spec.strategy)
        planners = [baseline, simplified] if baseline_first else [simplified, baseline]

        results = {}
        for planner in planners:
            action, report, root = planner.plan(belief)
            results[planner.name] = (action, report, root)
        base_action, base_report, base_root = results[BASELINE]
        sith_name = simplified.name
        sith_action, sith_report, sith_root = results[sith_name]

        consistent: bool | None = None
        if spec.verify:
            equal, divergence = compare_trees(base_root, sith_root)
            consistent = equal and base_report.action_index == sith_report.action_index
            if not consistent:
                reason = divergence or (
                    f"actions differ: {base_report.action_index} != {sith_report.action_index}"
                )
                raise ConsistencyFailure(f"row {row} rep {repetition} session {session}: {reason}")

        for name, report in ((BASELINE, base_report), (sith_name, sith_report)):
            records.append(
                SessionRecord(
                    row=list(row),
                    repetition=repetition,
                    session=session,
                    planner=name,
                    wall_time_s=report.wall_time_s,
                    action_index=report.action_index,
                    consistent=consistent,
                    resimplify_passes=report.resimplify_passes,
                    refine_promotions=report.refine_promotions,
                    tree_digest=report.tree_digest,
                )
            )

        # execute the (shared) decision against the hidden true state
        mean = belief.mean()
        trajectory.append(
            TrajectoryStep(
                step=session,
                state=(float(true_state[0]), float(true_state[1])),
                belief_mean=(float(mean[0]), float(mean[1])),
                action=getattr(base_action, "name", repr(base_action)),
                reward=float(model.state_reward(true_state, base_action)),
            )
        )
        if model.is_terminal_action(base_action):
            break
        exec_stream = rep_stream.fork(f"exec{session}")
        true_state = model.transition_sample(true_state, base_action, exec_stream.gen)
        observation = model.observation_sample(true_state, exec_stream.gen)
        belief = pf_update(belief, base_action, observation, model, exec_stream.gen).posterior
    return RepetitionResult(sessions=records, trajectory=trajectory)


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, 0.0
    return mean, statistics.stdev(values) / math.sqrt(len(values))


def summarize(spec: ExperimentSpec, sessions: list[SessionRecord]) -> list[RowSummary]:
    summaries = []
    for row in spec.rows:
        row_list = list(row)
        base = [s for s in sessions if s.row == row_list and s.planner == BASELINE]
        simp = [s for s in sessions if s.row == row_list and s.planner != BASELINE]
        b_mean, b_err = _mean_stderr([s.wall_time_s for s in base])
        s_mean, s_err = _mean_stderr([s.wall_time_s for s in simp])
        summaries.append(
            RowSummary(
                row=row_list,
                baseline_mean_s=b_mean,
                baseline_stderr_s=b_err,
                simplified_mean_s=s_mean,
                simplified_stderr_s=s_err,
                speedup=(b_mean / s_mean) if simp and s_mean > 0 else math.nan,
                consistent=all(s.consistent is not False for s in base + simp),
                sessions_run=len(base),
                resimplify_passes_mean=statistics.fmean([s.resimplify_passes for s in simp]) if simp else 0.0,
                refine_promotions_mean=statistics.fmean([s.refine_promotions for s in simp]) if simp else 0.0,
            )
        )
    return summaries


def run_experiment(spec: ExperimentSpec, workers: int = 1, trajectory_sink=None) -> RunReport:
    """Execute the full run matrix; returns the aggregated report.

    trajectory_sink, when given, is called with (row_index, repetition,
    trajectory steps) for each finished episode."""
    tasks = [(ri, rep) for ri in range(len(spec.rows)) for rep in range(spec.repetitions)]
    sessions: list[SessionRecord] = []
    if workers <= 1:
        results = (run_repetition(spec, ri, rep) for ri, rep in tasks)
        for (ri, rep), result in zip(tasks, results):
            sessions.extend(result.sessions)
            if trajectory_sink is not None:
                trajectory_sink(ri, rep, result.trajectory)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_repetition, spec, ri, rep) for ri, rep in tasks]
            for (ri, rep), fut in zip(tasks, futures):
                result = fut.result()
                sessions.extend(result.sessions)
                if trajectory_sink is not None:
                    trajectory_sink(ri, rep, result.trajectory)
    sessions.sort(key=lambda s: (s.row, s.repetition, s.session, s.planner))
    return RunReport(spec=spec.to_dict(), summaries=summarize(spec, sessions), sessions=sessions)


def export_report(report: RunReport, csv_path, json_path=None) -> None:
    """CSV summary plus a JSON sidecar with full per-session detail."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "algorithm", "mean_time_s", "stderr_s", "consistent", "speedup"])
        for s in report.summaries:
            config = "x".join(str(v) for v in s.row)
            writer.writerow([config, BASELINE, s.baseline_mean_s, s.baseline_stderr_s, s.consistent, s.speedup])
            writer.writerow(
                [config, SIMPLIFIED, s.simplified_mean_s, s.simplified_stderr_s, s.consistent, s.speedup]
            )
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=1)


def load_report(json_path) -> RunReport:
    with open(json_path) as fh:
        return RunReport.from_dict(json.load(fh))


def save_tree_snapshot(path, root: BeliefNode) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_dict(root), fh)


def load_tree_snapshot(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


class CountingModel:
    """Instrumentation wrapper counting scalar density evaluations."""

    def __init__(self, model):
        self._model = model
        self.transition_evals = 0
        self.observation_evals = 0

    def __getattr__(self, name):
        return getattr(self._model, name)

    def transition_density(self, x_next, x_prev, action):
        out = self._model.transition_density(x_next, x_prev, action)
        self.transition_evals += int(np.size(out))
        return out

    def transition_density_block(self, x_next, x_prev, action):
        out = self._model.transition_density_block(x_next, x_prev, action)
        self.transition_evals += int(np.size(out))
        return out

    def observation_density(self, z, x):
        out = self._model.observation_density(z, x)
        self.observation_evals += int(np.size(out))
        return out


def make_entropy_scenario(m: int, seed: int, model: LightDarkModel | None = None):
    """A realistic (prior, action, observation, posterior) tuple for bound
    tests and benchmarks, produced by an actual belief update."""
    model = model or LightDarkModel()
    stream = SeededStream.from_seed(seed).fork(f"scenario{m}")
    belief = model.initial_belief(m, stream.fork("b").gen)
    action = model.actions()[int(stream.fork("a").gen.integers(8))]
    observation = sample_observation(belief, action, model, stream.fork("z").gen)
    pf = pf_update(belief, action, observation, model, stream.fork("pf").gen)
    return model, belief, action, observation, pf


def bench_entropy(m_values: list[int], levels: int = 4, repeats: int = 5) -> list[dict]:
    """Time the full estimator and the level-1 bound initialization per m.

    Returns one dict per m with min-of-`repeats` timings; the full
    estimator's cost is dominated by the m^2 transition-density sweep."""
    from .bounds import init_cache

    results = []
    for m in m_values:
        model, _, action, observation, pf = make_entropy_scenario(m, seed=7)
        t_full = math.inf
        t_init = math.inf
        for _ in range(repeats):
            start = time.perf_counter()
            boers_minus_entropy(pf.prior_resampled, action, observation, pf.posterior, model)
            t_full = min(t_full, time.perf_counter() - start)
            start = time.perf_counter()
            init_cache(pf, model, action, levels, label=f"bench{m}")
            t_init = min(t_init, time.perf_counter() - start)
        entry = {"m": m, "t_full_s": t_full, "t_level1_s": t_init}
        if results:
            prev = results[-1]
            entry["ratio_vs_prev"] = t_full / prev["t_full_s"]
        results.append(entry)
    return results
