import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurd import _kernels_py as py_kernels

compiled = pytest.importorskip("nurd._kernels")


def _case(seed, n, d, ties):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if ties:
        X = np.round(X, 1)
    r = rng.normal(size=n)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").astype(np.intp))
    mask = (rng.random(n) < 0.8).astype(np.uint8)
    return X, r, order, mask


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 80),
    d=st.integers(1, 6),
    leaf=st.integers(1, 6),
    ties=st.booleans(),
)
def test_backends_pick_the_same_split(seed, n, d, leaf, ties):
    X, r, order, mask = _case(seed, n, d, ties)
    fc, tc, gc = compiled.best_split(X, r, order, mask, leaf)
    fp, tp, gp = py_kernels.best_split(X, r, order, mask, leaf)
    assert fc == fp
    assert tc == tp
    assert gc == pytest.approx(gp, rel=1e-12, abs=1e-12)


def test_split_matches_brute_force():
    X, r, order, mask = _case(11, 40, 3, ties=True)
    rows = np.flatnonzero(mask)
    best = (-1, 0.0, 0.0)
    for f in range(X.shape[1]):
        vals = np.unique(X[rows, f])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (a + b)
            left = rows[X[rows, f] <= thr]
            right = rows[X[rows, f] > thr]
            if len(left) < 3 or len(right) < 3:
                continue
            sse = lambda v: ((v - v.mean()) ** 2).sum()
            gain = sse(r[rows]) - sse(r[left]) - sse(r[right])
            if gain > best[2] + 1e-12:
                best = (f, thr, gain)
    f, thr, gain = compiled.best_split(X, r, order, mask, 3)
    assert (f, thr) == best[:2]
    assert gain == pytest.approx(best[2], rel=1e-9)


def test_no_split_when_leaf_constraint_binds():
    X, r, order, mask = _case(0, 5, 2, False)
    mask[:] = 1
    assert compiled.best_split(X, r, order, mask, 3)[0] == -1
    assert py_kernels.best_split(X, r, order, mask, 3)[0] == -1


def test_constant_feature_has_no_split():
    X = np.ones((10, 1))
    r = np.arange(10.0)
    order = np.argsort(X, axis=0).astype(np.intp)
    mask = np.ones(10, dtype=np.uint8)
    assert compiled.best_split(X, r, order, mask, 1)[0] == -1


def test_predict_tree_agrees():
    # root splits feature 1 at 0; left child splits feature 0 at 0.5
    feature = np.array([1, 0, -1, -1, -1], dtype=np.intp)
    threshold = np.array([0.0, 0.5, 0, 0, 0])
    left = np.array([1, 3, -1, -1, -1], dtype=np.intp)
    right = np.array([2, 4, -1, -1, -1], dtype=np.intp)
    value = np.array([0, 0, 7.0, 1.0, 2.0])
    X = np.array([[0.0, -1.0], [1.0, -1.0], [0.0, 1.0], [0.5, 0.0]])
    want = [1.0, 2.0, 7.0, 1.0]
    assert compiled.predict_tree(feature, threshold, left, right, value, X).tolist() == want
    assert py_kernels.predict_tree(feature, threshold, left, right, value, X).tolist() == want


@pytest.mark.parametrize("flag,expected", [("1", "python"), ("0", "cython")])
def test_backend_env_switch(flag, expected):
    env = {**os.environ, "NURD_PURE_PYTHON": flag}
    out = subprocess.run(
        [sys.executable, "-c", "from nurd import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == expected
