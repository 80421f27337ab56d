# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops: box distance matrices and the hinge-gradient sweep.

Loop order is boxes-outer so the input rows stay cache resident; all
accumulations run in a fixed order, so results are reproducible bit-for-bit
across runs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def l0_distance_matrix(const double[:, ::1] xs, const double[:, ::1] lower,
                       const double[:, ::1] upper):
    cdef Py_ssize_t ns = xs.shape[0], nb = lower.shape[0], nd = xs.shape[1]
    out_arr = np.empty((ns, nb), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, m, j
    cdef cnp.int64_t count
    cdef double x
    for m in range(nb):
        for i in range(ns):
            count = 0
            for j in range(nd):
                x = xs[i, j]
                if x < lower[m, j] or x > upper[m, j]:
                    count += 1
            out[i, m] = count
    return out_arr


def conical_distance_matrix(const double[:, ::1] xs, const double[:, ::1] lower,
                            const double[:, ::1] upper):
    cdef Py_ssize_t ns = xs.shape[0], nb = lower.shape[0], nd = xs.shape[1]
    out_arr = np.empty((ns, nb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, m, j
    cdef double acc, d, x
    for m in range(nb):
        for i in range(ns):
            acc = 0.0
            for j in range(nd):
                x = xs[i, j]
                d = lower[m, j] - x
                if d > 0.0:
                    acc += d
                d = x - upper[m, j]
                if d > 0.0:
                    acc += d
            out[i, m] = acc
    return out_arr


def train_forward(const double[:, ::1] xs, const double[:, ::1] lower,
                  const double[:, ::1] upper):
    """Fused l0 + conical distance matrices (one pass over the corner data)."""
    cdef Py_ssize_t ns = xs.shape[0], nb = lower.shape[0], nd = xs.shape[1]
    dist_arr = np.empty((ns, nb), dtype=np.int64)
    con_arr = np.empty((ns, nb), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] dist = dist_arr
    cdef double[:, ::1] con = con_arr
    cdef Py_ssize_t i, m, j
    cdef cnp.int64_t count
    cdef double acc, d, x
    for m in range(nb):
        for i in range(ns):
            count = 0
            acc = 0.0
            for j in range(nd):
                x = xs[i, j]
                d = lower[m, j] - x
                if d > 0.0:
                    acc += d
                    count += 1
                else:
                    d = x - upper[m, j]
                    if d > 0.0:
                        acc += d
                        count += 1
            dist[i, m] = count
            con[i, m] = acc
    return dist_arr, con_arr


def conical_grad(const double[:, ::1] xs, const double[:, ::1] lower,
                 const double[:, ::1] upper, const double[:, ::1] coef):
    """Accumulate dlo[m, j] = sum_i coef[i, m] * [x_ij < lo_mj] and
    dhi[m, j] = -sum_i coef[i, m] * [x_ij > hi_mj]. Rows with zero
    coefficient are skipped."""
    cdef Py_ssize_t ns = xs.shape[0], nb = lower.shape[0], nd = xs.shape[1]
    dlo_arr = np.zeros((nb, nd), dtype=np.float64)
    dhi_arr = np.zeros((nb, nd), dtype=np.float64)
    cdef double[:, ::1] dlo = dlo_arr
    cdef double[:, ::1] dhi = dhi_arr
    # transpose once so the i-sweep below reads contiguous coefficients
    coef_t_arr = np.ascontiguousarray(np.asarray(coef).T)
    cdef double[:, ::1] coef_t = coef_t_arr
    cdef Py_ssize_t i, m, j
    cdef double w, x
    for m in range(nb):
        for i in range(ns):
            w = coef_t[m, i]
            if w == 0.0:
                continue
            for j in range(nd):
                x = xs[i, j]
                if x < lower[m, j]:
                    dlo[m, j] += w
                if x > upper[m, j]:
                    dhi[m, j] -= w
    return dlo_arr, dhi_arr
