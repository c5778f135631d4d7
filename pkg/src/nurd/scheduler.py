"""Relaunch schedulers driven by straggler flags.

A flagged task is terminated at the checkpoint where it was flagged and relaunched
on a fresh machine. Its new run time is drawn uniformly from the latencies of tasks
that had already finished by then. A task is relaunched at most once. With a
limited spare pool, a flagged task waits for a machine; if it finishes on its own
while waiting, it is never relaunched.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .trace import JobTrace

OUTCOME_HEADER = [
    "job_id", "mode", "machines", "baseline_jct", "scheduled_jct", "reduction", "relaunch_count", "seed",
]
SWEEP_MACHINE_COUNTS = tuple(range(100, 1000, 100))


class MachinePool:
    """Spare machines available for relaunches; ``capacity=None`` never runs out."""

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("machine pool needs capacity >= 1")
        self.capacity = capacity
        self.available = capacity
        self.allocations = 0
        self.reclaims = 0

    @property
    def unlimited(self) -> bool:
        return self.capacity is None

    def has_free(self) -> bool:
        return self.unlimited or self.available > 0

    def acquire(self) -> None:
        if not self.unlimited:
            if self.available <= 0:
                raise RuntimeError("no machine available")
            self.available -= 1
        self.allocations += 1

    def release(self) -> None:
        if not self.unlimited:
            if self.available >= self.capacity:
                raise RuntimeError("released more machines than allocated")
            self.available += 1
        self.reclaims += 1


@dataclass
class ScheduleOutcome:
    job_id: str
    baseline_jct: float
    scheduled_jct: float
    machines: int | None = None
    # (task_id, checkpoint index, new latency)
    relaunches: list[tuple[str, int, float]] = field(default_factory=list)

    @property
    def reduction(self) -> float:
        return (self.baseline_jct - self.scheduled_jct) / self.baseline_jct

    def row(self, mode: str, seed: int) -> list:
        return [
            self.job_id, mode, "unlimited" if self.machines is None else self.machines,
            repr(self.baseline_jct), repr(self.scheduled_jct), repr(self.reduction),
            len(self.relaunches), seed,
        ]


def sample_relaunch_latency(finished_latencies, rng: np.random.Generator) -> float:
    finished = np.asarray(finished_latencies, dtype=np.float64)
    if finished.size == 0:
        raise ValueError("no finished task to sample a relaunch latency from")
    return float(finished[rng.integers(finished.size)])


def _simulate(job: JobTrace, flags: Mapping[str, int], pool: MachinePool, rng, observer=None):
    ids = job.task_ids
    pos = {tid: i for i, tid in enumerate(ids)}
    unknown = set(flags) - set(pos)
    if unknown:
        raise ValueError(f"flags for tasks absent from job {job.job_id}: {sorted(unknown)[:5]}")
    lat = job.latencies()
    completion = lat.copy()
    relaunched = np.zeros(job.n_tasks, dtype=bool)
    by_checkpoint: dict[int, list[int]] = {}
    for tid, t in flags.items():
        by_checkpoint.setdefault(int(t), []).append(pos[tid])

    out = ScheduleOutcome(job.job_id, float(lat.max()), float(lat.max()), pool.capacity)
    busy: list[float] = []  # completion times of relaunched tasks holding a spare machine
    waiting: list[int] = []
    for t, now in enumerate(job.checkpoints):
        if not pool.unlimited:
            still = []
            for done_at in busy:
                if done_at <= now:
                    pool.release()
                else:
                    still.append(done_at)
            busy = still
        candidates = sorted(set(waiting) | set(by_checkpoint.get(t, ())), key=lambda i: ids[i])
        waiting = []
        for i in candidates:
            if relaunched[i] or lat[i] <= now:
                continue
            if not pool.has_free():
                waiting.append(i)
                continue
            finished = lat[(lat <= now) & ~relaunched]
            new = sample_relaunch_latency(finished, rng)
            pool.acquire()
            relaunched[i] = True
            completion[i] = now + new
            busy.append(completion[i])
            out.relaunches.append((ids[i], t, new))
        if observer is not None:
            observer(t, pool)
    out.scheduled_jct = float(completion.max())
    return out


def schedule_unlimited(job: JobTrace, flags: Mapping[str, int], rng: np.random.Generator) -> ScheduleOutcome:
    """Relaunch every flagged task at the checkpoint it is flagged."""
    return _simulate(job, flags, MachinePool(None), rng)


def schedule_limited(
    job: JobTrace, flags: Mapping[str, int], m: int, rng: np.random.Generator, observer=None
) -> ScheduleOutcome:
    """Relaunch flagged tasks onto at most ``m`` spare machines.

    At each checkpoint machines whose relaunched task has completed return to the
    pool first. Flagged tasks (earlier waiters included) are then served in
    task-id order while machines last; the rest wait for the next checkpoint.
    ``observer(t, pool)`` is called after each checkpoint.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return _simulate(job, flags, MachinePool(m), rng, observer)


def scaled_machine_counts(n_tasks: int, counts=SWEEP_MACHINE_COUNTS, reference: int = 10_000) -> list[int]:
    """Scale machine counts meant for jobs of up to ``reference`` tasks to ``n_tasks``."""
    return [max(1, round(m * n_tasks / reference)) for m in counts]


def write_outcomes_csv(stream, rows) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(OUTCOME_HEADER)
    w.writerows(rows)
