"""Pure-numpy versions of the tree kernels.

Used when the compiled extension is unavailable or ``NURD_PURE_PYTHON=1``.
Both backends walk rows in the same presorted order, so they accumulate
identical sums and pick identical splits.
"""

import numpy as np


def best_split(X, r, order, mask, min_samples_leaf):
    """Best variance-reduction split for the rows selected by ``mask``.

    ``order[:, f]`` is the argsort of ``X[:, f]`` over all rows. Returns
    ``(feature, threshold, gain)`` with ``feature == -1`` when no admissible
    split improves on the parent. Ties keep the lowest feature, then the
    lowest threshold.
    """
    n = int(mask.sum())
    best_feature, best_threshold, best_gain = -1, 0.0, 0.0
    if n < 2 * min_samples_leaf:
        return best_feature, best_threshold, best_gain

    k = np.arange(1, n, dtype=np.float64)
    admissible = (k >= min_samples_leaf) & (k <= n - min_samples_leaf)
    total = None
    for f in range(X.shape[1]):
        o = order[:, f]
        rows = o[mask[o] != 0]
        v = X[rows, f]
        csum = np.cumsum(r[rows])
        if total is None:
            total = csum[-1]
            parent = total * total / n
        left = csum[:-1]
        right = total - left
        ok = admissible & (v[1:] > v[:-1])
        if not ok.any():
            continue
        gain = left * left / k + right * right / (n - k) - parent
        gain = np.where(ok, gain, -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > best_gain:
            best_gain = float(gain[j])
            best_feature = f
            best_threshold = 0.5 * (v[j] + v[j + 1])
    return best_feature, float(best_threshold), float(best_gain)


def predict_tree(feature, threshold, left, right, value, X):
    """Evaluate one array-encoded tree on every row of ``X``."""
    node = np.zeros(X.shape[0], dtype=np.intp)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        ri, ni = rows[internal], node[internal]
        go_left = X[ri, f[internal]] <= threshold[ni]
        node[internal] = np.where(go_left, left[ni], right[ni])
    return value[node].astype(np.float64)
