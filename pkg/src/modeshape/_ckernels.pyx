# cython: language_level=3
"""Compiled inner loops: extremum search, nearest-centroid assignment, silhouettes.

Signatures and results match :mod:`modeshape._pykernels` exactly; the
dispatcher in :mod:`modeshape.kernels` picks one of the two at import.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def local_extrema(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, start = 0, n_max = 0, n_min = 0
    cdef int prev = 0, s
    cdef double d
    cdef cnp.int64_t[::1] imax = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] imin = np.empty(n, dtype=np.int64)
    for i in range(1, n):
        d = x[i] - x[i - 1]
        if d == 0.0:
            continue
        s = 1 if d > 0.0 else -1
        if prev > 0 and s < 0:
            imax[n_max] = (start + i - 1) // 2
            n_max += 1
        elif prev < 0 and s > 0:
            imin[n_min] = (start + i - 1) // 2
            n_min += 1
        prev = s
        start = i
    return np.asarray(imax[:n_max]).copy(), np.asarray(imin[:n_min]).copy()


def assign_labels(const double[:, ::1] points, const double[:, ::1] centroids):
    cdef Py_ssize_t q = points.shape[0], dim = points.shape[1], k = centroids.shape[0]
    cdef Py_ssize_t i, j, d, best
    cdef double acc, diff, best_d
    cdef cnp.int64_t[::1] labels = np.empty(q, dtype=np.int64)
    cdef double[::1] dist2 = np.empty(q, dtype=np.float64)
    for i in range(q):
        best = 0
        best_d = INFINITY
        for j in range(k):
            acc = 0.0
            for d in range(dim):
                diff = points[i, d] - centroids[j, d]
                acc += diff * diff
            if acc < best_d:
                best_d = acc
                best = j
        labels[i] = best
        dist2[i] = best_d
    return np.asarray(labels), np.asarray(dist2)


def silhouette_samples(const double[:, ::1] points, const cnp.int64_t[::1] labels, Py_ssize_t k):
    cdef Py_ssize_t q = points.shape[0], dim = points.shape[1]
    cdef Py_ssize_t i, j, d, c, own
    cdef double acc, diff, a, b, m
    cdef double[:, ::1] sums = np.zeros((q, k), dtype=np.float64)
    cdef cnp.int64_t[::1] counts = np.zeros(k, dtype=np.int64)
    cdef double[::1] out = np.zeros(q, dtype=np.float64)
    for i in range(q):
        counts[labels[i]] += 1
    for i in range(q):
        for j in range(i + 1, q):
            acc = 0.0
            for d in range(dim):
                diff = points[i, d] - points[j, d]
                acc += diff * diff
            acc = sqrt(acc)
            sums[i, labels[j]] += acc
            sums[j, labels[i]] += acc
    for i in range(q):
        own = labels[i]
        if counts[own] <= 1:
            out[i] = 0.0
            continue
        a = sums[i, own] / (counts[own] - 1)
        b = INFINITY
        for c in range(k):
            if c == own or counts[c] == 0:
                continue
            m = sums[i, c] / counts[c]
            if m < b:
                b = m
        if b == INFINITY:
            out[i] = 0.0
            continue
        m = a if a > b else b
        out[i] = 0.0 if m == 0.0 else (b - a) / m
    return np.asarray(out)
