import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nurd.metrics import (
    ConfusionCounts,
    Rates,
    aggregate,
    confusion,
    curve_indices,
    f1_curve,
    final_confusion,
    mean_curve,
    rates,
    write_curve_csv,
    write_summary_csv,
)
from nurd.online import KEEP, STRAGGLER, LogEntry, PredictionLog

from conftest import make_job


def test_rates_example():
    r = rates(ConfusionCounts(tp=8, fp=2, fn=2, tn=88))
    assert r.tpr == 0.8
    assert r.fnr == pytest.approx(0.2)
    assert r.fpr == pytest.approx(2 / 90)
    assert r.f1 == pytest.approx(0.8)


def test_rates_empty_conventions():
    assert rates(ConfusionCounts(0, 0, 0, 10)) == Rates(0.0, 0.0, 0.0, 1.0)
    assert rates(ConfusionCounts(0, 3, 0, 0)) == Rates(0.0, 1.0, 0.0, 0.0)
    assert rates(ConfusionCounts(0, 0, 4, 0)).f1 == 0.0


@given(tp=st.integers(0, 50), fp=st.integers(0, 50), fn=st.integers(0, 50), tn=st.integers(0, 50))
def test_rates_bounds(tp, fp, fn, tn):
    r = rates(ConfusionCounts(tp, fp, fn, tn))
    for v in (r.tpr, r.fpr, r.fnr, r.f1):
        assert 0.0 <= v <= 1.0
    if tp + fn:
        assert r.tpr + r.fnr == pytest.approx(1.0)


def test_confusion_counts():
    c = confusion({"a", "b"}, {"b", "c"}, ["a", "b", "c", "d", "e"])
    assert c == ConfusionCounts(tp=1, fp=1, fn=1, tn=2)
    assert c.total == 5
    with pytest.raises(ValueError):
        confusion({"zz"}, set(), ["a"])


def test_curve_indices():
    assert curve_indices(20) == [1, 3, 5, 7, 9, 11, 13, 15, 17, 19]
    assert curve_indices(10) == list(range(10))
    assert curve_indices(3) == [0, 0, 0, 1, 1, 1, 2, 2, 2, 2]
    assert curve_indices(25)[-1] == 24


def _log(job_id, flags, evaluated=()):
    entries = [LogEntry(tid, t, 1.0, 1.0, 1.0, 1.0, STRAGGLER) for tid, t in flags.items()]
    entries += [LogEntry(tid, t, 0.0, 1.0, 1.0, 0.0, KEEP) for tid, t in evaluated]
    return PredictionLog(job_id, entries)


def test_f1_curve_counts_flags_by_checkpoint():
    job = make_job([float(v) for v in range(1, 11)], [float(v) for v in range(1, 11)])
    truth = {"t008", "t009"}
    log = _log("j", {"t009": 1, "t008": 5, "t007": 5})
    curve = f1_curve(log, truth, job)
    assert [x for x, _ in curve] == pytest.approx([k / 10 for k in range(1, 11)])
    ys = [y for _, y in curve]
    assert ys[0] == 0.0  # index 0: nothing flagged yet
    assert ys[1] == pytest.approx(2 / 3)  # one tp, one fn
    assert ys[5] == pytest.approx(0.8)  # two tp, one fp
    c = final_confusion(log, truth, job)
    assert ys[-1] == rates(c).f1


def test_final_confusion_rejects_foreign_tasks():
    job = make_job([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="absent"):
        final_confusion(_log("j", {}, evaluated=[("ghost", 1)]), set(), job)


def test_keep_verdicts_do_not_count():
    job = make_job([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    c = final_confusion(_log("j", {"t002": 1}, evaluated=[("t001", 1)]), {"t002"}, job)
    assert c == ConfusionCounts(1, 0, 0, 2)


def test_aggregate_is_unweighted_mean():
    agg = aggregate([Rates(1.0, 0.0, 0.0, 1.0), Rates(0.0, 0.5, 1.0, 0.0)])
    assert agg == {"tpr": 0.5, "fpr": 0.25, "fnr": 0.5, "f1": 0.5}
    with pytest.raises(ValueError):
        aggregate([])


def test_mean_curve():
    out = mean_curve([[(0.1, 0.0), (0.2, 1.0)], [(0.1, 1.0), (0.2, 1.0)]])
    assert out == [(0.1, 0.5), (0.2, 1.0)]


def test_csv_writers():
    buf = io.StringIO()
    write_summary_csv(buf, {"nurd": {"tpr": 1, "fpr": 0, "fnr": 0, "f1": 1}})
    assert buf.getvalue().splitlines() == ["mode,tpr,fpr,fnr,f1", "nurd,1.000000,0.000000,0.000000,1.000000"]
    buf = io.StringIO()
    write_curve_csv(buf, {"gbtr": [(0.1, 0.25)]})
    assert buf.getvalue().splitlines() == ["mode,normalized_time,f1", "gbtr,0.1,0.250000"]


def test_hand_examples():
    ids = [f"t{i}" for i in range(6)]
    assert rates(confusion({"t1", "t2"}, {"t1", "t2"}, ids)).f1 == 1.0
    c = confusion({"t0", "t1", "t2"}, {"t0", "t1", "t3"}, ids)
    assert (c.tp, c.fp, c.fn) == (2, 1, 1)
    assert rates(c).f1 == pytest.approx(2 / 3)
    r = rates(confusion(set(), {"t0"}, ids))
    assert (r.tpr, r.fnr) == (0.0, 1.0)
    assert aggregate([Rates(1, 0, 0, 0.4), Rates(1, 0, 0, 0.8)])["f1"] == pytest.approx(0.6)
    assert aggregate([Rates(0.1, 0.2, 0.9, 0.3)]) == Rates(0.1, 0.2, 0.9, 0.3).as_dict()


def test_curve_for_perfect_and_silent_predictors():
    job = make_job([float(v) for v in range(1, 11)], [float(v) for v in range(1, 11)])
    truth = {"t008", "t009"}
    perfect = f1_curve(_log("j", {"t008": 0, "t009": 0}), truth, job)
    assert [y for _, y in perfect] == [1.0] * 10
    silent = f1_curve(_log("j", {}, evaluated=[("t008", 1)]), truth, job)
    assert [y for _, y in silent] == [0.0] * 10
