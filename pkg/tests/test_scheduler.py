import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurd.scheduler import (
    OUTCOME_HEADER,
    MachinePool,
    sample_relaunch_latency,
    scaled_machine_counts,
    schedule_limited,
    schedule_unlimited,
    write_outcomes_csv,
)

from conftest import make_job


def rng(seed=0):
    return np.random.default_rng(seed)


def test_never_flagging_changes_nothing(small_job):
    out = schedule_unlimited(small_job, {}, rng())
    assert out.reduction == 0.0
    assert out.relaunches == []
    assert schedule_limited(small_job, {}, 3, rng()).reduction == 0.0


def test_single_flag_completes_after_sampled_latency():
    # four tasks of latency 2 finish by checkpoint 0 (time 2); task 4 is slow
    job = make_job([2.0, 2.0, 2.0, 2.0, 50.0], [2.0, 4.0, 50.0])
    out = schedule_unlimited(job, {"t004": 1}, rng())
    assert out.relaunches == [("t004", 1, 2.0)]
    assert out.scheduled_jct == 6.0
    assert out.baseline_jct == 50.0
    assert out.reduction == pytest.approx(44 / 50)


def test_flag_after_natural_finish_is_ignored():
    job = make_job([2.0, 2.0, 3.0], [2.0, 3.0])
    out = schedule_unlimited(job, {"t002": 1}, rng())
    assert out.relaunches == []
    assert out.scheduled_jct == 3.0


def test_relaunch_can_make_things_worse():
    # the only finished latency (40) is longer than the flagged task's remaining time
    job = make_job([40.0, 50.0], [40.0, 45.0, 50.0])
    out = schedule_unlimited(job, {"t001": 0}, rng())
    assert out.scheduled_jct == 80.0
    assert out.reduction < 0


def test_one_machine_two_flags_waits():
    # t003 and t004 are flagged together; t003 wins the single machine by id order
    job = make_job([1.0, 1.0, 1.0, 30.0, 30.0], [1.0, 2.0, 3.0, 4.0, 30.0])
    out = schedule_limited(job, {"t003": 1, "t004": 1}, 1, rng())
    assert [r[:2] for r in out.relaunches] == [("t003", 1), ("t004", 2)]
    # t003 reruns for 1.0 from time 2 and frees the machine at time 3
    assert out.scheduled_jct == 4.0


def test_waiting_task_that_finishes_naturally_is_dropped():
    # t001 takes the only machine at time 2 and frees it at 3; by the next
    # checkpoint (time 5) the waiting t002 has finished on its own
    job = make_job([1.0, 30.0, 5.0], [1.0, 2.0, 5.0, 30.0])
    out = schedule_limited(job, {"t001": 1, "t002": 1}, 1, rng())
    assert out.relaunches == [("t001", 1, 1.0)]
    assert out.scheduled_jct == 5.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 6))
def test_pool_is_conserved(seed, m):
    r = np.random.default_rng(seed)
    lat = np.concatenate([r.uniform(1, 10, 30), r.uniform(20, 60, 10)])
    job = make_job(lat, np.linspace(60 / 12, 60, 12))
    t_flag = r.integers(1, 6, size=40)
    flags = {tid: int(t) for tid, t, hit in zip(job.task_ids, t_flag, r.random(40) < 0.4) if hit}

    def check(t, pool):
        assert 0 <= pool.available <= pool.capacity
        assert pool.allocations - pool.reclaims == pool.capacity - pool.available

    out = schedule_limited(job, flags, m, np.random.default_rng(seed), observer=check)
    relaunched = [tid for tid, _, _ in out.relaunches]
    assert len(relaunched) == len(set(relaunched))
    assert set(relaunched) <= set(flags)
    for tid, t, _ in out.relaunches:
        assert t >= flags[tid]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_enough_machines_equals_unlimited(seed):
    r = np.random.default_rng(seed)
    lat = r.uniform(1, 50, 25)
    job = make_job(lat, np.linspace(5, 50, 10))
    flags = {tid: int(r.integers(1, 9)) for tid in job.task_ids if r.random() < 0.5}
    a = schedule_unlimited(job, flags, np.random.default_rng(seed))
    b = schedule_limited(job, flags, job.n_tasks, np.random.default_rng(seed))
    assert a.relaunches == b.relaunches
    assert a.scheduled_jct == b.scheduled_jct


def test_sampling_is_uniform():
    r = rng(123)
    draws = [sample_relaunch_latency([1.0, 2.0], r) for _ in range(10_000)]
    assert abs(np.mean(draws) - 1.5) < 0.02
    with pytest.raises(ValueError):
        sample_relaunch_latency([], r)


def test_pool_errors():
    with pytest.raises(ValueError):
        MachinePool(0)
    pool = MachinePool(1)
    pool.acquire()
    assert not pool.has_free()
    with pytest.raises(RuntimeError):
        pool.acquire()
    pool.release()
    with pytest.raises(RuntimeError):
        pool.release()
    with pytest.raises(ValueError):
        schedule_limited(make_job([1.0], [1.0]), {}, 0, rng())


def test_unknown_flag_rejected():
    with pytest.raises(ValueError, match="absent"):
        schedule_unlimited(make_job([1.0, 2.0], [1.0, 2.0]), {"ghost": 0}, rng())


def test_scaled_machine_counts():
    assert scaled_machine_counts(10_000) == list(range(100, 1000, 100))
    assert scaled_machine_counts(200) == [2, 4, 6, 8, 10, 12, 14, 16, 18]
    assert scaled_machine_counts(10) == [1] * 9


def test_outcomes_csv():
    job = make_job([2.0, 2.0, 2.0, 2.0, 50.0], [2.0, 4.0, 50.0])
    out = schedule_limited(job, {"t004": 1}, 2, rng())
    buf = io.StringIO()
    write_outcomes_csv(buf, [out.row("oracle", 7)])
    header, row = buf.getvalue().splitlines()
    assert header.split(",") == OUTCOME_HEADER
    assert row == "j,oracle,2,50.0,6.0,0.88,1,7"


def test_sampling_examples():
    assert sample_relaunch_latency([12.0], rng()) == 12.0
    a = [sample_relaunch_latency([1.0, 2.0, 3.0], r) for r in [rng(4)] for _ in range(20)]
    b = [sample_relaunch_latency([1.0, 2.0, 3.0], r) for r in [rng(4)] for _ in range(20)]
    assert a == b
