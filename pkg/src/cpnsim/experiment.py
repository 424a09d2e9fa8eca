"""Replicated parameter sweeps over the raytracing model.

A plan enumerates (scene, scenario, node count) sweep points in a fixed
order; every replication of a point gets its own random stream derived
from ``(base_seed, point_index, replication)``, so any subset of the
sweep can be reproduced, and results do not depend on execution order
even when replications run in parallel worker processes.
"""

from __future__ import annotations

import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from cpnsim.engine import DEFAULT_STEP_LIMIT, SimState, StepLimitExceeded, run
from cpnsim.monitors import SceneRecord, attach_scene_monitor
from cpnsim.raytrace import SCENARIOS, SceneConfig, ScenarioParams, build_net
from cpnsim.stochastic import RngStream

logger = logging.getLogger(__name__)

DEFAULT_NODE_COUNTS = tuple(range(1, 26))


@dataclass(frozen=True)
class ExperimentPlan:
    """What to sweep: scenes x scenarios x node counts x replications."""

    scenes: tuple[SceneConfig, ...]
    node_counts: tuple[int, ...] = DEFAULT_NODE_COUNTS
    scenarios: tuple[str, ...] = SCENARIOS
    replications: int = 30
    base_seed: int = 1
    scenes_per_run: int = 1
    step_limit: int = DEFAULT_STEP_LIMIT
    jobs: int = 1
    param_overrides: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if not self.scenes:
            raise ValueError("plan needs at least one scene")
        if not self.node_counts or min(self.node_counts) < 1:
            raise ValueError("node counts must all be >= 1")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"unknown scenario {s!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def params_for(self, scenario: str, node_count: int) -> ScenarioParams:
        return ScenarioParams(
            node_count=node_count,
            scenario=scenario,
            scenes_per_run=self.scenes_per_run,
            **dict(self.param_overrides),
        )

    def points(self):
        """(point_index, scene, scenario, node_count) in sweep order."""
        index = 0
        for scene in self.scenes:
            for scenario in self.scenarios:
                for node_count in self.node_counts:
                    yield index, scene, scenario, node_count
                    index += 1


@dataclass(frozen=True)
class SweepPoint:
    """Aggregated durations of one (scene, scenario, node count) point."""

    scene: str
    scenario: str
    nodes: int
    mean_ms: float
    std_ms: float
    replications: int
    mean_failures: float


@dataclass
class ExperimentResult:
    """Sweep points plus the raw records and any aborted replications."""

    points: list[SweepPoint]
    records: dict[tuple[str, str], list[SceneRecord]] = field(default_factory=dict)
    aborted: list[tuple[str, str, int, int]] = field(default_factory=list)


def _run_replication(scene: SceneConfig, params: ScenarioParams,
                     seed_path: tuple[int, ...],
                     step_limit: int) -> list[SceneRecord] | None:
    """Records of one seeded run, or None if it hit the step ceiling."""
    rng = RngStream(*seed_path)
    net, marking = build_net(scene, params, rng)
    state = SimState(net, marking, rng)
    hooks: list = []
    monitor = attach_scene_monitor(hooks)

    def stop(st, event):
        return monitor.scenes_completed >= params.scenes_per_run

    try:
        run(net, state, stop=stop, hooks=hooks, max_steps=step_limit)
    except StepLimitExceeded:
        return None
    if monitor.scenes_completed < params.scenes_per_run:
        return None
    return monitor.records


def _replication_task(args):
    scene, params, seed_path, step_limit = args
    return _run_replication(scene, params, seed_path, step_limit)


def _replication_args(plan: ExperimentPlan):
    for index, scene, scenario, node_count in plan.points():
        params = plan.params_for(scenario, node_count)
        for rep in range(plan.replications):
            seed_path = (plan.base_seed, index, rep)
            yield (scene, params, seed_path, plan.step_limit)


def run_experiment_detailed(plan: ExperimentPlan) -> ExperimentResult:
    """Run the full plan and keep raw records and abort reports."""
    args = list(_replication_args(plan))
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            outcomes = list(pool.map(_replication_task, args, chunksize=4))
    else:
        outcomes = [_replication_task(a) for a in args]

    result = ExperimentResult(points=[])
    reps = plan.replications
    for i, (index, scene, scenario, node_count) in enumerate(plan.points()):
        point_records: list[SceneRecord] = []
        completed = 0
        for rep in range(reps):
            outcome = outcomes[i * reps + rep]
            if outcome is None:
                result.aborted.append((scene.label, scenario, node_count, rep))
                logger.warning(
                    "replication aborted at step limit: scene=%s scenario=%s "
                    "nodes=%d rep=%d", scene.label, scenario, node_count, rep,
                )
                continue
            completed += 1
            point_records.extend(outcome)
        durations = [r.duration_ms for r in point_records]
        if durations:
            mean_ms = statistics.fmean(durations)
            std_ms = statistics.stdev(durations) if len(durations) > 1 else 0.0
            mean_failures = statistics.fmean(r.failures for r in point_records)
        else:
            mean_ms = std_ms = mean_failures = 0.0
        result.points.append(
            SweepPoint(scene.label, scenario, node_count,
                       mean_ms, std_ms, completed, mean_failures)
        )
        key = (scene.label, scenario)
        result.records.setdefault(key, []).extend(point_records)
    return result


def run_experiment(plan: ExperimentPlan) -> list[SweepPoint]:
    """Aggregated sweep points for the plan (see run_experiment_detailed)."""
    return run_experiment_detailed(plan).points


CSV_HEADER = "scene,scenario,nodes,mean_ms,std_ms,replications,mean_failures"


def emit_csv(points, path) -> None:
    """Write sweep points as CSV, sorted by (scene, scenario, nodes)."""
    rows = sorted(points, key=lambda p: (p.scene, p.scenario, p.nodes))
    lines = [CSV_HEADER]
    for p in rows:
        lines.append(
            f"{p.scene},{p.scenario},{p.nodes},{p.mean_ms},{p.std_ms},"
            f"{p.replications},{p.mean_failures}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> list[SweepPoint]:
    """Parse a file written by :func:`emit_csv`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a sweep summary file")
    points = []
    for line in lines[1:]:
        scene, scenario, nodes, mean_ms, std_ms, reps, mean_failures = (
            line.split(",")
        )
        points.append(
            SweepPoint(scene, scenario, int(nodes), float(mean_ms),
                       float(std_ms), int(reps), float(mean_failures))
        )
    return points


def emit_plotdata(points, out_dir) -> list[Path]:
    """One <scene>_<scenario>.dat series per (scene, scenario).

    Each file holds "nodes seconds" columns sorted by node count, ready
    for gnuplot or similar.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series: dict[tuple[str, str], list[SweepPoint]] = {}
    for p in points:
        series.setdefault((p.scene, p.scenario), []).append(p)
    written = []
    for (scene, scenario) in sorted(series):
        path = out / f"{scene}_{scenario}.dat"
        lines = ["# nodes seconds"]
        for p in sorted(series[(scene, scenario)], key=lambda p: p.nodes):
            lines.append(f"{p.nodes} {p.mean_ms / 1000}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
    return written
