"""Confusion metrics, F1 over normalized time, and per-job aggregation."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .online import PredictionLog
from .trace import JobTrace

N_CURVE_POINTS = 10
RATE_FIELDS = ("tpr", "fpr", "fnr", "f1")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Rates:
    tpr: float
    fpr: float
    fnr: float
    f1: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def confusion(flagged, truth, task_ids) -> ConfusionCounts:
    flagged, truth, ids = set(flagged), set(truth), set(task_ids)
    if not flagged <= ids:
        raise ValueError(f"flagged tasks not in job: {sorted(flagged - ids)[:5]}")
    if not truth <= ids:
        raise ValueError(f"true stragglers not in job: {sorted(truth - ids)[:5]}")
    tp = len(flagged & truth)
    fp = len(flagged - truth)
    fn = len(truth - flagged)
    return ConfusionCounts(tp, fp, fn, len(ids) - tp - fp - fn)


def final_confusion(log: PredictionLog, truth, job: JobTrace) -> ConfusionCounts:
    """A task counts as flagged if it ever got a straggler verdict."""
    ids = set(job.task_ids)
    unknown = {e.task_id for e in log.entries} - ids
    if unknown:
        raise ValueError(f"log mentions tasks absent from job {job.job_id}: {sorted(unknown)[:5]}")
    return confusion(log.flags(), truth, ids)


def rates(c: ConfusionCounts) -> Rates:
    """TPR, FPR, FNR and F1.

    Empty denominators give a rate of 0. F1 is 1 when there is nothing to find
    and nothing was flagged (tp = fp = fn = 0).
    """
    pos = c.tp + c.fn
    neg = c.fp + c.tn
    tpr = c.tp / pos if pos else 0.0
    fnr = c.fn / pos if pos else 0.0
    fpr = c.fp / neg if neg else 0.0
    denom = 2 * c.tp + c.fp + c.fn
    f1 = 2 * c.tp / denom if denom else 1.0
    return Rates(tpr, fpr, fnr, f1)


def curve_indices(n_checkpoints: int, n_points: int = N_CURVE_POINTS) -> list[int]:
    """Checkpoint index sampled at normalized time k/n_points, k = 1..n_points.

    Jobs with fewer checkpoints than points repeat the nearest checkpoint.
    """
    return [(k * n_checkpoints + n_points - 1) // n_points - 1 for k in range(1, n_points + 1)]


def f1_curve(log: PredictionLog, truth, job: JobTrace, n_points: int = N_CURVE_POINTS):
    """``[(normalized_time, f1), ...]``, counting tasks flagged by each sampled checkpoint."""
    flags = log.flags()
    ids = job.task_ids
    out = []
    for k, idx in enumerate(curve_indices(job.n_checkpoints, n_points), start=1):
        flagged = {tid for tid, t in flags.items() if t <= idx}
        out.append((k / n_points, rates(confusion(flagged, truth, ids)).f1))
    return out


def aggregate(rows) -> dict[str, float]:
    """Unweighted mean of every metric over per-job rows (dicts or :class:`Rates`)."""
    rows = [r.as_dict() if isinstance(r, Rates) else dict(r) for r in rows]
    if not rows:
        raise ValueError("nothing to aggregate")
    keys = [k for k in rows[0] if all(k in r for r in rows)]
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


def mean_curve(curves) -> list[tuple[float, float]]:
    curves = list(curves)
    if not curves:
        raise ValueError("nothing to aggregate")
    xs = [x for x, _ in curves[0]]
    ys = np.mean([[y for _, y in c] for c in curves], axis=0)
    return list(zip(xs, (float(y) for y in ys)))


def write_summary_csv(stream, summary: dict[str, dict[str, float]]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["mode", *RATE_FIELDS])
    for mode in sorted(summary):
        w.writerow([mode, *(f"{summary[mode][k]:.6f}" for k in RATE_FIELDS)])


def write_curve_csv(stream, curves: dict[str, list[tuple[float, float]]]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["mode", "normalized_time", "f1"])
    for mode in sorted(curves):
        for x, y in curves[mode]:
            w.writerow([mode, f"{x:.1f}", f"{y:.6f}"])
