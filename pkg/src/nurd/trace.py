"""Job traces in the canonical checkpointed format.

A trace is two flat CSV files:

* tasks, header ``job_id,task_id,latency``: one row per task, latency in seconds.
* snapshots, header ``job_id,task_id,t,time,f0,...,f{d-1}``: one row per task per
  checkpoint while the task runs, plus the checkpoint at which it finishes.

The checkpoint schedule of a job is the sorted set of distinct snapshot times.
Every task is assumed to start at time 0 of its job.
"""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

TASK_HEADER = ["job_id", "task_id", "latency"]
SNAPSHOT_PREFIX = ["job_id", "task_id", "t", "time"]


class TraceError(ValueError):
    """Base class for trace ingestion errors."""


class ParseError(TraceError):
    def __init__(self, source: str, line: int, msg: str):
        super().__init__(f"{source} line {line}: {msg}")
        self.source = source
        self.line = line


class ValidationError(TraceError):
    pass


class SchemaError(TraceError):
    def __init__(self, column: str, msg: str | None = None):
        super().__init__(msg or f"missing required column {column!r}")
        self.column = column


@dataclass
class TaskRecord:
    job_id: str
    task_id: str
    latency: float
    # row t is the feature vector observed at checkpoint t
    snapshots: np.ndarray

    @property
    def finish_index(self) -> int:
        return self.snapshots.shape[0] - 1


@dataclass
class JobTrace:
    job_id: str
    tasks: list[TaskRecord]
    checkpoints: np.ndarray
    feature_dim: int
    imputed: int = 0

    def __post_init__(self):
        self.checkpoints = np.asarray(self.checkpoints, dtype=np.float64)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_checkpoints(self) -> int:
        return self.checkpoints.shape[0]

    @property
    def task_ids(self) -> list[str]:
        return [t.task_id for t in self.tasks]

    def latencies(self) -> np.ndarray:
        return np.array([t.latency for t in self.tasks], dtype=np.float64)

    def finish_indices(self) -> np.ndarray:
        return np.array([t.finish_index for t in self.tasks], dtype=np.intp)

    def feature_tensor(self) -> np.ndarray:
        """Dense ``(T, n, d)`` array; a finished task keeps its final snapshot."""
        T, n = self.n_checkpoints, self.n_tasks
        out = np.empty((T, n, self.feature_dim))
        for i, task in enumerate(self.tasks):
            k = task.snapshots.shape[0]
            out[:k, i] = task.snapshots
            out[k:, i] = task.snapshots[-1]
        return out

    def validate(self, min_tasks: int = 1) -> None:
        cps = self.checkpoints
        if cps.ndim != 1 or cps.size == 0:
            raise ValidationError(f"job {self.job_id}: empty checkpoint schedule")
        if np.any(np.diff(cps) <= 0):
            raise ValidationError(f"job {self.job_id}: checkpoints not strictly increasing")
        if len(self.tasks) < min_tasks:
            raise ValidationError(f"job {self.job_id}: {len(self.tasks)} tasks < {min_tasks}")
        seen = set()
        for task in self.tasks:
            where = f"job {self.job_id} task {task.task_id}"
            if task.task_id in seen:
                raise ValidationError(f"{where}: duplicate task id")
            seen.add(task.task_id)
            if not (task.latency > 0 and math.isfinite(task.latency)):
                raise ValidationError(f"{where}: latency must be positive and finite")
            s = task.snapshots
            if s.ndim != 2 or s.shape[0] == 0:
                raise ValidationError(f"{where}: no snapshots")
            if s.shape[1] != self.feature_dim:
                raise ValidationError(f"{where}: feature dimension {s.shape[1]} != {self.feature_dim}")
            if not np.all(np.isfinite(s)):
                raise ValidationError(f"{where}: non-finite feature value")
            expected = finish_index(cps, task.latency)
            if expected is None:
                raise ValidationError(f"{where}: latency {task.latency} beyond last checkpoint {cps[-1]}")
            if task.finish_index != expected:
                raise ValidationError(
                    f"{where}: last snapshot at checkpoint {task.finish_index}, "
                    f"but latency {task.latency} finishes at checkpoint {expected}"
                )


def finish_index(checkpoints: np.ndarray, latency: float) -> int | None:
    """Smallest t with ``checkpoints[t] >= latency``, or None past the end."""
    t = int(np.searchsorted(checkpoints, latency, side="left"))
    return t if t < checkpoints.shape[0] else None


# --- canonical CSV ------------------------------------------------------------


def _float(source, line, text, what):
    try:
        return float(text)
    except ValueError:
        raise ParseError(source, line, f"bad {what} {text!r}") from None


def parse_canonical(tasks_stream, snapshots_stream, min_tasks: int = 1) -> list[JobTrace]:
    """Read and validate canonical task and snapshot CSV streams."""
    tasks_reader = csv.reader(tasks_stream)
    header = next(tasks_reader, None)
    if header != TASK_HEADER:
        raise ParseError("tasks", 1, f"expected header {','.join(TASK_HEADER)}, got {header}")

    jobs: OrderedDict[str, OrderedDict[str, float]] = OrderedDict()
    for line, row in enumerate(tasks_reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError("tasks", line, f"expected 3 fields, got {len(row)}")
        job_id, task_id, lat = row
        latency = _float("tasks", line, lat, "latency")
        tasks = jobs.setdefault(job_id, OrderedDict())
        if task_id in tasks:
            raise ParseError("tasks", line, f"duplicate task {job_id}/{task_id}")
        tasks[task_id] = latency

    snap_reader = csv.reader(snapshots_stream)
    header = next(snap_reader, None)
    if header is None or header[:4] != SNAPSHOT_PREFIX:
        raise ParseError("snapshots", 1, f"expected header starting {','.join(SNAPSHOT_PREFIX)}")
    names = header[4:]
    d = len(names)
    if names != [f"f{j}" for j in range(d)]:
        raise ParseError("snapshots", 1, "feature columns must be f0..f{d-1}")

    # (job, task) -> list of (t, time, features, line)
    rows: dict[tuple[str, str], list] = {}
    for line, row in enumerate(snap_reader, start=2):
        if not row:
            continue
        if len(row) != 4 + d:
            raise ParseError("snapshots", line, f"expected {4 + d} fields, got {len(row)}")
        job_id, task_id = row[0], row[1]
        try:
            t = int(row[2])
        except ValueError:
            raise ParseError("snapshots", line, f"bad checkpoint index {row[2]!r}") from None
        time = _float("snapshots", line, row[3], "time")
        feats = [_float("snapshots", line, v, "feature") for v in row[4:]]
        if not all(math.isfinite(v) for v in feats):
            raise ValidationError(f"snapshots line {line}: non-finite feature value")
        if job_id not in jobs or task_id not in jobs[job_id]:
            raise ValidationError(f"snapshots line {line}: unknown task {job_id}/{task_id}")
        rows.setdefault((job_id, task_id), []).append((t, time, feats, line))

    out = []
    for job_id, tasks in jobs.items():
        times = sorted({r[1] for tid in tasks for r in rows.get((job_id, tid), [])})
        if not times:
            raise ValidationError(f"job {job_id}: no snapshots")
        index = {tm: k for k, tm in enumerate(times)}
        records = []
        for task_id, latency in tasks.items():
            trows = rows.get((job_id, task_id))
            if not trows:
                raise ValidationError(f"job {job_id} task {task_id}: no snapshots")
            trows.sort(key=lambda r: r[0])
            for k, (t, tm, _, line) in enumerate(trows):
                if index[tm] != t:
                    raise ValidationError(
                        f"snapshots line {line}: t={t} but time {tm} is checkpoint {index[tm]}"
                    )
                if t != k:
                    raise ValidationError(
                        f"job {job_id} task {task_id}: snapshot indices must be 0..k without gaps"
                    )
            snaps = np.array([r[2] for r in trows], dtype=np.float64).reshape(len(trows), d)
            records.append(TaskRecord(job_id, task_id, latency, snaps))
        job = JobTrace(job_id, records, np.array(times), d)
        job.validate()
        out.append(job)
    return filter_jobs(out, min_tasks)


def write_canonical(jobs: list[JobTrace], tasks_stream, snapshots_stream) -> None:
    if not jobs:
        raise ValueError("nothing to write")
    d = jobs[0].feature_dim
    if any(j.feature_dim != d for j in jobs):
        raise ValueError("all jobs in one snapshot file must share a feature dimension")
    tw = csv.writer(tasks_stream, lineterminator="\n")
    sw = csv.writer(snapshots_stream, lineterminator="\n")
    tw.writerow(TASK_HEADER)
    sw.writerow(SNAPSHOT_PREFIX + [f"f{j}" for j in range(d)])
    for job in jobs:
        for task in job.tasks:
            tw.writerow([job.job_id, task.task_id, repr(float(task.latency))])
            for t, x in enumerate(task.snapshots):
                sw.writerow(
                    [job.job_id, task.task_id, t, repr(float(job.checkpoints[t]))]
                    + [repr(float(v)) for v in x]
                )


def dumps_canonical(jobs: list[JobTrace]) -> tuple[str, str]:
    t, s = io.StringIO(), io.StringIO()
    write_canonical(jobs, t, s)
    return t.getvalue(), s.getvalue()


def load_canonical(tasks_path, snapshots_path, min_tasks: int = 1) -> list[JobTrace]:
    with open(tasks_path, newline="") as tf, open(snapshots_path, newline="") as sf:
        return parse_canonical(tf, sf, min_tasks)


def save_canonical(jobs: list[JobTrace], tasks_path, snapshots_path) -> None:
    with open(tasks_path, "w", newline="") as tf, open(snapshots_path, "w", newline="") as sf:
        write_canonical(jobs, tf, sf)


def filter_jobs(traces: list[JobTrace], min_tasks: int) -> list[JobTrace]:
    if min_tasks < 1:
        raise ValueError("min_tasks must be >= 1")
    return [j for j in traces if j.n_tasks >= min_tasks]


# --- production trace adapters ------------------------------------------------

# Google cluster trace (2011) task_usage measurements, in feature order f0..f14.
GOOGLE_FEATURES = [
    "MCU", "MAXCPU", "SCPU", "CMU", "AMU", "MAXMU", "UPC", "TPC",
    "MIO", "MAXIO", "MDK", "CPI", "MAI", "EV", "FL",
]
# Alibaba batch_instance usage columns, in feature order f0..f3.
ALIBABA_FEATURES = ["cpu_avg", "cpu_max", "mem_avg", "mem_max"]


@dataclass
class CanonicalStreams:
    """Adapter output: canonical rows plus imputation bookkeeping."""

    feature_names: list[str]
    tasks: list[list] = field(default_factory=list)
    snapshots: list[list] = field(default_factory=list)
    # (job_id, task_id, t, feature name) of every imputed cell
    imputed: list[tuple] = field(default_factory=list)

    def to_csv(self) -> tuple[str, str]:
        t, s = io.StringIO(), io.StringIO()
        tw = csv.writer(t, lineterminator="\n")
        sw = csv.writer(s, lineterminator="\n")
        tw.writerow(TASK_HEADER)
        sw.writerow(SNAPSHOT_PREFIX + [f"f{j}" for j in range(len(self.feature_names))])
        tw.writerows([[a, b, repr(float(c))] for a, b, c in self.tasks])
        for row in self.snapshots:
            sw.writerow(row[:3] + [repr(float(v)) for v in row[3:]])
        return t.getvalue(), s.getvalue()

    def to_jobs(self, min_tasks: int = 1) -> list[JobTrace]:
        t, s = self.to_csv()
        jobs = parse_canonical(io.StringIO(t), io.StringIO(s), min_tasks)
        counts: dict[str, int] = {}
        for job_id, *_ in self.imputed:
            counts[job_id] = counts.get(job_id, 0) + 1
        for job in jobs:
            job.imputed = counts.get(job.job_id, 0)
        return jobs


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, str):
        return v.strip() == "" or v.strip().lower() in ("nan", "na", "null")
    return isinstance(v, float) and math.isnan(v)


def _windows_to_canonical(groups, names, window):
    """Turn per-task lists of (start, end, features) windows into canonical rows.

    Snapshot time is the window end measured from the task's first window start,
    rounded up to a multiple of ``window`` so tasks of one job share checkpoints.
    Missing feature values take the per-job mean of that feature.
    """
    out = CanonicalStreams(list(names))
    by_job: OrderedDict[str, list] = OrderedDict()
    for (job_id, task_id), wins in groups.items():
        by_job.setdefault(job_id, []).append((task_id, sorted(wins, key=lambda w: w[0])))

    for job_id, tasks in by_job.items():
        d = len(names)
        sums, counts = np.zeros(d), np.zeros(d)
        for _, wins in tasks:
            for w in wins:
                for j, v in enumerate(w[2]):
                    if v is not None:
                        sums[j] += v
                        counts[j] += 1
        means = np.divide(sums, counts, out=np.zeros(d), where=counts > 0)
        for task_id, wins in tasks:
            start = wins[0][0]
            latency = wins[-1][1] - start
            if latency <= 0:
                continue
            n_cp = max(1, math.ceil(latency / window - 1e-9))
            out.tasks.append([job_id, task_id, latency])
            # carry the latest window forward onto each grid checkpoint
            ends = [w[1] - start for w in wins]
            wi = 0
            for t in range(n_cp):
                grid = (t + 1) * window
                while wi + 1 < len(wins) and ends[wi + 1] <= grid + 1e-9:
                    wi += 1
                feats = []
                for j, v in enumerate(wins[wi][2]):
                    if v is None:
                        out.imputed.append((job_id, task_id, t, names[j]))
                        v = means[j]
                    feats.append(float(v))
                out.snapshots.append([job_id, task_id, t, float(grid)] + feats)
    return out


def _adapt(raw_rows, names, job_key, task_key, start_key, end_key, window, time_scale):
    groups: OrderedDict[tuple[str, str], list] = OrderedDict()
    for k, row in enumerate(raw_rows):
        for col in (job_key, task_key, start_key, end_key, *names):
            if col not in row:
                raise SchemaError(col, f"row {k}: missing required column {col!r}")
        feats = [None if _is_missing(row[c]) else float(row[c]) for c in names]
        start = float(row[start_key]) * time_scale
        end = float(row[end_key]) * time_scale
        groups.setdefault((str(row[job_key]), str(row[task_key])), []).append((start, end, feats))
    return _windows_to_canonical(groups, names, window)


def adapt_google(raw_rows, window: float = 300.0, time_scale: float = 1e-6) -> CanonicalStreams:
    """Map Google task_usage rows to canonical streams with d=15.

    Each row is a mapping with ``job_id``, ``task_index``, ``start_time``,
    ``end_time`` (microseconds in the public trace, hence ``time_scale``) and the
    15 feature columns named in ``GOOGLE_FEATURES``. EV and FL are expected as
    cumulative counts already joined in from task_events.
    """
    return _adapt(raw_rows, GOOGLE_FEATURES, "job_id", "task_index",
                  "start_time", "end_time", window, time_scale)


def adapt_alibaba(raw_rows, window: float = 60.0, time_scale: float = 1.0) -> CanonicalStreams:
    """Map Alibaba batch_instance rows to canonical streams with d=4.

    Each instance is one canonical task, keyed ``task_name/inst_name`` under its
    job. A row carries ``job_name``, ``task_name``, ``inst_name``, ``start_time``,
    ``end_time`` (seconds) and the columns in ``ALIBABA_FEATURES``. Rows sharing
    an instance are successive usage windows.
    """
    rows = []
    for k, row in enumerate(raw_rows):
        for col in ("task_name", "inst_name"):
            if col not in row:
                raise SchemaError(col, f"row {k}: missing required column {col!r}")
        r = dict(row)
        r["_task"] = f"{row['task_name']}/{row['inst_name']}"
        rows.append(r)
    return _adapt(rows, ALIBABA_FEATURES, "job_name", "_task",
                  "start_time", "end_time", window, time_scale)


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


# --- synthetic traces ---------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    n_tasks: int = 200
    feature_dim: int = 8
    straggler_fraction: float = 0.1
    feature_drift: float = 3.0
    latency_shape: str = "bimodal"
    seed: int = 0
    n_checkpoints: int = 20
    # loading of the latent task load on the first n_informative features (-1: all)
    informativeness: float = 0.8
    n_informative: int = -1
    base_latency: float = 100.0
    # log-scale spread of usage features; 0 keeps them Gaussian
    usage_scale: float = 0.5
    # std of the log-latency noise not explained by the latent load
    latency_noise: float = 0.3
    job_id: str = "job-0"

    def __post_init__(self):
        if self.n_tasks < 100:
            raise ValueError("n_tasks must be >= 100")
        if not 0.0 < self.straggler_fraction < 1.0:
            raise ValueError("straggler_fraction must be in (0, 1)")
        if self.feature_drift < 0:
            raise ValueError("feature_drift must be >= 0")
        if self.latency_shape not in ("bimodal", "long_tail"):
            raise ValueError("latency_shape must be 'bimodal' or 'long_tail'")
        if self.feature_dim < 1 or self.n_checkpoints < 2:
            raise ValueError("feature_dim >= 1 and n_checkpoints >= 2 required")
        if not 0.0 <= self.informativeness < 1.0:
            raise ValueError("informativeness must be in [0, 1)")


def generate_synthetic(config: SyntheticConfig) -> JobTrace:
    """Draw one synthetic job.

    Each task has a latent load ``u ~ N(0, 1)``. Features are standard normal with
    the first ``n_informative`` loading ``informativeness * u``, then mapped to
    skewed nonnegative usage values ``exp(usage_scale * x)``. Non-stragglers get
    lognormal latencies increasing in ``u``. Exactly ``ceil(fraction * n)`` tasks
    are stragglers: their latencies come from a slow mode strictly above every
    fast latency and every feature is offset by ``feature_drift`` (before the
    usage mapping, so the offset is in standardized units). A task's
    snapshot at checkpoint t is its final feature vector plus noise that fades
    as the task approaches completion.
    """
    c = config
    rng = np.random.default_rng(c.seed)
    n, d = c.n_tasks, c.feature_dim
    k = math.ceil(c.straggler_fraction * n - 1e-9)

    u = rng.standard_normal(n)
    load = np.zeros(d)
    load[: d if c.n_informative < 0 else min(c.n_informative, d)] = c.informativeness
    noise = rng.standard_normal((n, d))
    final = u[:, None] * load + noise * np.sqrt(1.0 - load**2)

    stragglers = np.sort(rng.choice(n, size=k, replace=False))
    is_slow = np.zeros(n, dtype=bool)
    is_slow[stragglers] = True
    final[is_slow] += c.feature_drift

    latency = c.base_latency * np.exp(0.35 * u + c.latency_noise * rng.standard_normal(n))
    fast_max = latency[~is_slow].max()
    if c.latency_shape == "bimodal":
        slow = fast_max * (2.0 + 0.25 * np.abs(rng.standard_normal(k)) + 0.1 * np.exp(u[is_slow]))
    else:
        # capped so the checkpoint grid still resolves the fast mode
        slow = fast_max * (1.05 + np.minimum(rng.pareto(1.5, size=k), 4.0))
    latency[is_slow] = slow

    T = c.n_checkpoints
    checkpoints = latency.max() * np.arange(1, T + 1) / T
    checkpoints[-1] = latency.max()
    direction = rng.standard_normal((n, d))

    width = len(str(n - 1))
    tasks = []
    for i in range(n):
        f = finish_index(checkpoints, latency[i])
        progress = np.minimum(1.0, checkpoints[: f + 1] / latency[i])
        snaps = final[i] + 0.5 * (1.0 - progress)[:, None] * direction[i]
        if c.usage_scale > 0:
            snaps = np.exp(c.usage_scale * snaps)
        tasks.append(TaskRecord(c.job_id, f"t{i:0{width}d}", float(latency[i]), snaps))
    job = JobTrace(c.job_id, tasks, checkpoints, d)
    job.validate()
    return job


def parse_kv_config(text: str) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("config", lineno, f"expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def synthetic_config_from_kv(kv: dict[str, str], **overrides) -> SyntheticConfig:
    types = {f.name: f.type for f in SyntheticConfig.__dataclass_fields__.values()}
    casts = {"int": int, "float": float, "str": str}
    kwargs = {}
    for key, value in {**kv, **overrides}.items():
        if key not in types:
            raise ValueError(f"unknown synthetic config key {key!r}")
        kwargs[key] = casts[types[key]](value) if isinstance(value, str) else value
    return SyntheticConfig(**kwargs)
