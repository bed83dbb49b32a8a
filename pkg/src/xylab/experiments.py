"""Batches of warm-start runs over instance sets, arms and depths."""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .problems import ProblemInstance, build_problem
from .qaoa import ExperimentConfig, RunRecord, median_quartiles, warm_start_run


def instance_set(problem: str, n: int, count: int, graph: str = "Reg3",
                 first_seed: int = 0) -> list[ProblemInstance]:
    """``count`` instances with consecutive generator seeds."""
    return [build_problem(problem, n, graph=graph, seed=first_seed + t) for t in range(count)]


@dataclass(frozen=True)
class Task:
    instance_index: int
    instance: ProblemInstance
    config: ExperimentConfig


def _run(task: Task) -> RunRecord:
    return warm_start_run(task.instance, task.config)


def run_tasks(tasks: Sequence[Task], jobs: int = 1) -> list[RunRecord]:
    """Execute tasks, in parallel when ``jobs > 1``; results keep task order."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run, tasks))
    return [_run(t) for t in tasks]


def arm_tasks(instances: Sequence[ProblemInstance], arms: Iterable[str], p: int, *,
              restarts: int, steps: int, lr: float, seed: int,
              random_steps: int | None = None) -> list[Task]:
    """One task per (instance, arm); instance ``t`` uses master seed ``seed + t``."""
    tasks = []
    for t, inst in enumerate(instances):
        for arm in arms:
            cfg = ExperimentConfig.for_arm(arm, p=p, restarts=restarts, steps_per_phase=steps,
                                           lr=lr, seed=seed + t, random_steps=random_steps)
            tasks.append(Task(t, inst, cfg))
    return tasks


@dataclass(frozen=True)
class ArmSummary:
    arm: str
    p: int
    instances: int
    ar_median: float
    ar_q1: float
    ar_q3: float
    succ_median: float
    succ_q1: float
    succ_q3: float

    def row(self) -> dict:
        return dict(self.__dict__)


def summarize(records: Sequence[RunRecord], restarts: int | None = None) -> list[ArmSummary]:
    """Median and quartiles across instances of the best-of-restarts metrics, per (p, arm)."""
    groups: dict[tuple[int, str], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.config.p, rec.arm), []).append(rec)
    out = []
    for (p, arm), recs in sorted(groups.items()):
        ar = median_quartiles([r.best_ar(restarts) for r in recs])
        succ = median_quartiles([r.best_succ(restarts) for r in recs])
        out.append(ArmSummary(arm, p, len(recs), ar[0], ar[1], ar[2], succ[0], succ[1], succ[2]))
    return out


def depth_trend_warnings(summaries: Sequence[ArmSummary], arm: str = "ws") -> list[str]:
    """Soft check: warm-start AR medians should not drop as depth grows."""
    rows = sorted((s for s in summaries if s.arm == arm), key=lambda s: s.p)
    msgs = []
    for a, b in zip(rows, rows[1:]):
        if b.ar_median < a.ar_median:
            msg = f"{arm} median AR fell from {a.ar_median:.6f} at p={a.p} to {b.ar_median:.6f} at p={b.p}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            msgs.append(msg)
    return msgs


def final_metrics(records: Sequence[RunRecord]) -> np.ndarray:
    """(instances, 2) array of best final AR and success probability."""
    return np.array([[r.best_ar(), r.best_succ()] for r in records])
