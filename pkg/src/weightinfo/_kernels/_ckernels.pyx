# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels.

Same interface as the numpy fallback. All accumulation is sequential
float64 in index order, so within this backend every per-pair squared
distance is bitwise identical to sq_dist on the same inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _sq_dist_c(const double[:, ::1] A, Py_ssize_t i,
                              const double[:, ::1] B, Py_ssize_t j) nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0
    cdef double diff
    for k in range(A.shape[1]):
        diff = A[i, k] - B[j, k]
        s += diff * diff
    return s


def sq_dist(a, b):
    """Squared Euclidean distance between two vectors, float64."""
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t k
    cdef double s = 0.0
    cdef double diff
    for k in range(av.shape[0]):
        diff = av[k] - bv[k]
        s += diff * diff
    return s


def pairwise_sq(points):
    """Full matrix of squared distances, exactly symmetric, zero diagonal."""
    A_arr = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] A = A_arr
    cdef Py_ssize_t n = A.shape[0]
    out_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double d
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                d = _sq_dist_c(A, i, A, j)
                out[i, j] = d
                out[j, i] = d
    return out_arr


def cross_sq(left, right):
    """Matrix of squared distances between rows of two point sets."""
    A_arr = np.ascontiguousarray(left, dtype=np.float64)
    B_arr = np.ascontiguousarray(right, dtype=np.float64)
    cdef const double[:, ::1] A = A_arr
    cdef const double[:, ::1] B = B_arr
    cdef Py_ssize_t na = A.shape[0]
    cdef Py_ssize_t nb = B.shape[0]
    out_arr = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(na):
            for j in range(nb):
                out[i, j] = _sq_dist_c(A, i, B, j)
    return out_arr


def nearest_sq(refs, query):
    """Smallest squared distance from query to any row of refs.

    Returns (distance, index); ties resolve to the lowest row index.
    """
    R_arr = np.ascontiguousarray(refs, dtype=np.float64)
    q_arr = np.ascontiguousarray(query, dtype=np.float64)
    cdef const double[:, ::1] R = R_arr
    cdef const double[::1] q = q_arr
    cdef Py_ssize_t n = R.shape[0]
    cdef Py_ssize_t d = R.shape[1]
    cdef Py_ssize_t i, k
    cdef Py_ssize_t best_i = 0
    cdef double best = 0.0
    cdef double s, diff
    with nogil:
        for i in range(n):
            s = 0.0
            for k in range(d):
                diff = R[i, k] - q[k]
                s += diff * diff
            if i == 0 or s < best:
                best = s
                best_i = i
    return best, best_i


def nearest_sq_bulk(refs, queries):
    """nearest_sq for every row of queries.

    Returns (distances, indices) as float64 / intp arrays.
    """
    R_arr = np.ascontiguousarray(refs, dtype=np.float64)
    Q_arr = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] R = R_arr
    cdef const double[:, ::1] Q = Q_arr
    cdef Py_ssize_t nr = R.shape[0]
    cdef Py_ssize_t nq = Q.shape[0]
    cdef Py_ssize_t d = R.shape[1]
    dists_arr = np.empty(nq, dtype=np.float64)
    indices_arr = np.empty(nq, dtype=np.intp)
    cdef double[::1] dists = dists_arr
    cdef cnp.intp_t[::1] indices = indices_arr
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t best_j
    cdef double best, s, diff
    with nogil:
        for i in range(nq):
            best = 0.0
            best_j = 0
            for j in range(nr):
                s = 0.0
                for k in range(d):
                    diff = R[j, k] - Q[i, k]
                    s += diff * diff
                if j == 0 or s < best:
                    best = s
                    best_j = j
            dists[i] = best
            indices[i] = best_j
    return dists_arr, indices_arr
