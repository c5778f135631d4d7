# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels. Same contract as ``nurd._kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def best_split(const double[:, :] X, const double[:] r, const cnp.intp_t[:, :] order,
               const unsigned char[:] mask, Py_ssize_t min_samples_leaf):
    cdef Py_ssize_t n_rows = X.shape[0]
    cdef Py_ssize_t n_features = X.shape[1]
    cdef Py_ssize_t n = 0
    cdef Py_ssize_t i, f, row, k
    cdef double total = 0.0, parent, left, right, gain, v, prev_v
    cdef Py_ssize_t best_feature = -1
    cdef double best_threshold = 0.0, best_gain = 0.0
    cdef double f_best_gain, f_best_threshold
    cdef bint f_found

    for i in range(n_rows):
        if mask[i]:
            n += 1
    if n < 2 * min_samples_leaf:
        return best_feature, best_threshold, best_gain

    # total must be summed in the same order as the fallback: feature 0's sort order
    for i in range(n_rows):
        row = order[i, 0]
        if mask[row]:
            total += r[row]
    parent = total * total / n

    for f in range(n_features):
        k = 0
        left = 0.0
        prev_v = 0.0
        f_found = False
        f_best_gain = 0.0
        f_best_threshold = 0.0
        for i in range(n_rows):
            row = order[i, f]
            if not mask[row]:
                continue
            v = X[row, f]
            # candidate split between the previous row (left size k) and this one
            if k >= min_samples_leaf and k <= n - min_samples_leaf and v > prev_v:
                right = total - left
                gain = left * left / k + right * right / (n - k) - parent
                if not f_found or gain > f_best_gain:
                    f_best_gain = gain
                    f_best_threshold = 0.5 * (prev_v + v)
                    f_found = True
            left += r[row]
            k += 1
            prev_v = v
        if f_found and f_best_gain > best_gain:
            best_gain = f_best_gain
            best_feature = f
            best_threshold = f_best_threshold
    return best_feature, best_threshold, best_gain


def predict_tree(const cnp.intp_t[:] feature, const double[:] threshold,
                 const cnp.intp_t[:] left, const cnp.intp_t[:] right,
                 const double[:] value, const double[:, :] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, node
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        o[i] = value[node]
    return out
