import numpy as np
import pytest

from nurd.trace import JobTrace, SyntheticConfig, TaskRecord, generate_synthetic

_CRITERIA: list[tuple[str, str, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary.

    ``ok=None`` records a skipped criterion.
    """

    def record(name: str, ok: bool | None, detail: str = ""):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        _CRITERIA.append((name, status, detail))
        print(f"{status}  {name}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _CRITERIA:
        terminalreporter.write_line(f"{status}  {name}  {detail}")


@pytest.fixture
def small_job():
    return generate_synthetic(SyntheticConfig(n_tasks=150, feature_dim=4, seed=3, job_id="small"))


def make_job(latencies, checkpoints, d=2, job_id="j", features=None):
    """Hand-built job; features default to a per-task constant vector."""
    checkpoints = np.asarray(checkpoints, dtype=float)
    tasks = []
    for i, lat in enumerate(latencies):
        k = int(np.searchsorted(checkpoints, lat, side="left"))
        x = np.full(d, float(i)) if features is None else np.asarray(features[i], dtype=float)
        tasks.append(TaskRecord(job_id, f"t{i:03d}", float(lat), np.tile(x, (k + 1, 1))))
    job = JobTrace(job_id, tasks, checkpoints, d)
    job.validate()
    return job
