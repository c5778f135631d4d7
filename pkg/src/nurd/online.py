"""Online straggler prediction from finished (negative) and running (unlabeled) tasks.

At every checkpoint a latency regressor is trained on finished tasks only and a
propensity model separates finished from running tasks. Each running task's
predicted latency is divided by a weight built from its propensity score, so
tasks that look unlike anything finished get their prediction inflated. A
calibration offset, computed once from feature centroids at warm-up, shifts all
weights up or down before clamping.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._rng import job_seed
from .models import GbtHyperparams, fit_gbt, fit_logistic
from .trace import JobTrace

log = logging.getLogger(__name__)

MODES = ("nurd", "nurd_nc", "gbtr", "oracle")
RHO_CAP = 1e6
STRAGGLER = "straggler"
KEEP = "keep_running"
LOG_HEADER = ["job_id", "task_id", "t", "y_hat", "z", "w", "y_adj", "verdict"]


class WarmupError(RuntimeError):
    """Too few tasks finish to form the initial training set."""


@dataclass(frozen=True)
class NurdConfig:
    mode: str = "nurd"
    alpha: float = 0.5
    epsilon: float = 0.05
    threshold_percentile: float = 90.0
    warmup_fraction: float = 0.04
    retrain_every: int = 1
    seed: int = 0
    # absolute straggler threshold in seconds; overrides the percentile
    threshold: float | None = None
    min_warmup: int = 5
    rho_cap: float = RHO_CAP
    # forces the calibration term, bypassing the centroid estimate
    delta_override: float | None = None
    l2: float = 1e-4
    max_iter: int = 500

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        if not 0 < self.threshold_percentile < 100:
            raise ValueError("threshold_percentile must be in (0, 100)")
        if not 0 < self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must be in (0, 1)")
        if self.retrain_every < 1:
            raise ValueError("retrain_every must be >= 1")
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError("threshold must be > 0")


@dataclass(frozen=True)
class CalibrationParams:
    alpha: float
    epsilon: float
    rho: float
    delta: float

    @classmethod
    def from_rho(cls, rho: float, alpha: float, epsilon: float) -> "CalibrationParams":
        return cls(alpha, epsilon, rho, calibration_term(rho, alpha))


# --- formulas -----------------------------------------------------------------


def compute_centroids(X_fin, X_run) -> tuple[np.ndarray, np.ndarray]:
    X_fin = np.asarray(X_fin, dtype=np.float64)
    X_run = np.asarray(X_run, dtype=np.float64)
    if X_fin.ndim != 2 or X_run.ndim != 2 or len(X_fin) == 0 or len(X_run) == 0:
        raise ValueError("centroids need non-empty 2-D finished and running sets")
    if X_fin.shape[1] != X_run.shape[1]:
        raise ValueError("finished and running sets differ in dimension")
    return X_fin.mean(axis=0), X_run.mean(axis=0)


def latency_indicator(c_fin, c_run, cap: float = RHO_CAP) -> float:
    """Squared norm of the finished centroid over the squared centroid gap.

    Large when running tasks sit close to finished ones. Capped, and the cap is
    returned outright when the centroids (nearly) coincide.
    """
    c_fin = np.asarray(c_fin, dtype=np.float64)
    c_run = np.asarray(c_run, dtype=np.float64)
    if c_fin.shape != c_run.shape:
        raise ValueError("centroid dimension mismatch")
    gap = c_run - c_fin
    denom = float(gap @ gap)
    if denom < 1e-12:
        return float(cap)
    return min(float(c_fin @ c_fin) / denom, float(cap))


def calibration_term(rho: float, alpha: float) -> float:
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return 1.0 / (1.0 + rho) - alpha


def weight(z, delta: float, epsilon: float):
    """``max(epsilon, min(z + delta, 1))``; works on scalars and arrays."""
    w = np.maximum(epsilon, np.minimum(np.asarray(z, dtype=np.float64) + delta, 1.0))
    return float(w) if w.ndim == 0 else w


def adjust(y_hat, w):
    out = np.asarray(y_hat, dtype=np.float64) / np.asarray(w, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def nearest_rank(values, percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("percentile of an empty sample")
    rank = max(1, math.ceil(percentile / 100.0 * v.size - 1e-12))
    return float(v[rank - 1])


def straggler_threshold(job: JobTrace, threshold_percentile: float = 90.0) -> float:
    return nearest_rank(job.latencies(), threshold_percentile)


def straggler_truth(job: JobTrace, threshold_percentile: float = 90.0, threshold: float | None = None) -> set[str]:
    if job.n_tasks == 0:
        raise ValueError("empty job")
    tau = threshold if threshold is not None else straggler_threshold(job, threshold_percentile)
    return {t.task_id for t in job.tasks if t.latency >= tau}


# --- log ------------------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    task_id: str
    t: int
    y_hat: float
    z: float
    w: float
    y_adj: float
    verdict: str


@dataclass
class PredictionLog:
    job_id: str
    entries: list[LogEntry] = field(default_factory=list)
    threshold: float = float("nan")
    warmup_index: int | None = None
    calibration: CalibrationParams | None = None

    def __len__(self):
        return len(self.entries)

    def flags(self) -> dict[str, int]:
        """Task id to the checkpoint index of its straggler verdict."""
        return {e.task_id: e.t for e in self.entries if e.verdict == STRAGGLER}

    def write_csv(self, stream, header: bool = True) -> None:
        w = csv.writer(stream, lineterminator="\n")
        if header:
            w.writerow(LOG_HEADER)
        for e in self.entries:
            w.writerow([self.job_id, e.task_id, e.t, repr(e.y_hat), repr(e.z), repr(e.w), repr(e.y_adj), e.verdict])


@dataclass(frozen=True)
class CheckpointState:
    t: int
    finished: frozenset
    running: frozenset
    predicted_stragglers: frozenset
    X_fin: np.ndarray
    Y_fin: np.ndarray
    X_run: np.ndarray


# --- the loop -------------------------------------------------------------------


def _minmax(X_visible: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = X_visible.min(axis=0)
    span = X_visible.max(axis=0) - lo
    span[span < 1e-12] = 1.0
    return lo, span


def run_online(
    job: JobTrace,
    cfg: NurdConfig | None = None,
    hp: GbtHyperparams | None = None,
    observer: Callable[[CheckpointState], None] | None = None,
) -> tuple[set[str], PredictionLog]:
    """Replay ``job`` checkpoint by checkpoint and flag predicted stragglers.

    Prediction starts at the checkpoint after warm-up, i.e. once
    ``max(min_warmup, ceil(warmup_fraction * n))`` tasks have finished. A flagged
    task is terminated and never evaluated again; any other running task is
    evaluated again at the next checkpoint. ``observer`` receives a
    :class:`CheckpointState` at warm-up and after every checkpoint.
    """
    cfg = cfg or NurdConfig()
    hp = hp or GbtHyperparams()
    ids = job.task_ids
    n, T = job.n_tasks, job.n_checkpoints
    lat = job.latencies()
    fin_at = job.finish_indices()
    tau = cfg.threshold if cfg.threshold is not None else nearest_rank(lat, cfg.threshold_percentile)
    plog = PredictionLog(job.job_id, threshold=tau)

    need = max(cfg.min_warmup, math.ceil(cfg.warmup_fraction * n - 1e-12))
    if n < need:
        raise WarmupError(f"job {job.job_id}: {n} tasks, warm-up needs {need} finished")
    counts = np.array([(fin_at <= t).sum() for t in range(T)])
    t0 = int(np.argmax(counts >= need))
    plog.warmup_index = t0

    X_all = job.feature_tensor()
    lo, span = _minmax(X_all[: t0 + 1].reshape(-1, job.feature_dim))
    X_all = (X_all - lo) / span

    finished = [i for i in range(n) if fin_at[i] <= t0]
    running = [i for i in range(n) if fin_at[i] > t0]
    flagged: list[int] = []
    X_fin = [X_all[t0, i] for i in finished]
    Y_fin = [lat[i] for i in finished]

    def emit(t):
        if observer is None:
            return
        observer(
            CheckpointState(
                t,
                frozenset(ids[i] for i in finished),
                frozenset(ids[i] for i in running),
                frozenset(ids[i] for i in flagged),
                np.array(X_fin),
                np.array(Y_fin),
                X_all[t, running] if running else np.empty((0, job.feature_dim)),
            )
        )

    emit(t0)
    if not running:
        log.debug("job %s: nothing left running after warm-up", job.job_id)
        return set(), plog

    learn = cfg.mode != "oracle"
    if learn:
        if cfg.delta_override is not None:
            plog.calibration = CalibrationParams(cfg.alpha, cfg.epsilon, float("nan"), cfg.delta_override)
        else:
            c_fin, c_run = compute_centroids(np.array(X_fin), X_all[t0, running])
            rho = latency_indicator(c_fin, c_run, cfg.rho_cap)
            plog.calibration = CalibrationParams.from_rho(rho, cfg.alpha, cfg.epsilon)
        seed = int(np.random.SeedSequence(job_seed(cfg.seed, job.job_id)).generate_state(1)[0])

        def refit(t):
            h = fit_gbt(np.array(X_fin), np.array(Y_fin), hp, seed=seed + t)
            g = fit_logistic(np.array(X_fin), X_all[t, running], l2=cfg.l2, max_iter=cfg.max_iter)
            return h, g

        h, g = refit(t0)
        delta = plog.calibration.delta

    for t in range(t0 + 1, T):
        done = [i for i in running if fin_at[i] <= t]
        if done:
            running = [i for i in running if fin_at[i] > t]
            finished.extend(done)
            X_fin.extend(X_all[t, i] for i in done)
            Y_fin.extend(lat[i] for i in done)
        if not running:
            emit(t)
            break
        X_run = X_all[t, running]
        if learn:
            if done and t % cfg.retrain_every == 0:
                h, g = refit(t)
            # latencies are non-negative; the clamp only guards round-off
            y_hat = np.maximum(h.predict(X_run), 0.0)
            z = g.predict(X_run)
            if cfg.mode == "gbtr":
                w = np.ones_like(z)
            elif cfg.mode == "nurd_nc":
                w = z
            else:
                w = weight(z, delta, cfg.epsilon)
            y_adj = y_hat / w
        else:
            y_hat = lat[running]
            z = w = np.ones(len(running))
            y_adj = y_hat
        hit = y_adj >= tau
        for k, i in enumerate(running):
            plog.entries.append(
                LogEntry(ids[i], t, float(y_hat[k]), float(z[k]), float(w[k]), float(y_adj[k]),
                         STRAGGLER if hit[k] else KEEP)
            )
        if hit.any():
            flagged.extend(i for k, i in enumerate(running) if hit[k])
            running = [i for k, i in enumerate(running) if not hit[k]]
        emit(t)
        if not running:
            break

    return {ids[i] for i in flagged}, plog
