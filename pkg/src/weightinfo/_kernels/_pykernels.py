"""Pure numpy distance kernels.

Fallback backend used when the compiled extension is unavailable. Each
function matches the compiled backend's interface; within one backend
every per-pair squared distance is bitwise identical to sq_dist on the
same inputs, which the exact-oracle tests rely on.
"""

import numpy as np


def _as_matrix(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _as_vector(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def sq_dist(a, b):
    """Squared Euclidean distance between two vectors, float64."""
    a = _as_vector(a)
    b = _as_vector(b)
    return float(np.sum((a - b) ** 2))


def pairwise_sq(points):
    """Full matrix of squared distances, exactly symmetric, zero diagonal."""
    A = _as_matrix(points)
    n = A.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n - 1):
        row = ((A[i + 1 :] - A[i]) ** 2).sum(axis=1)
        out[i, i + 1 :] = row
        out[i + 1 :, i] = row
    return out


def cross_sq(left, right):
    """Matrix of squared distances between rows of two point sets."""
    A = _as_matrix(left)
    B = _as_matrix(right)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    for i in range(A.shape[0]):
        out[i] = ((B - A[i]) ** 2).sum(axis=1)
    return out


def nearest_sq(refs, query):
    """Smallest squared distance from query to any row of refs.

    Returns (distance, index); ties resolve to the lowest row index.
    """
    R = _as_matrix(refs)
    q = _as_vector(query)
    d2 = ((R - q) ** 2).sum(axis=1)
    idx = int(np.argmin(d2))
    return float(d2[idx]), idx


def nearest_sq_bulk(refs, queries):
    """nearest_sq for every row of queries.

    Returns (distances, indices) as float64 / intp arrays.
    """
    R = _as_matrix(refs)
    Q = _as_matrix(queries)
    n = Q.shape[0]
    dists = np.empty(n, dtype=np.float64)
    indices = np.empty(n, dtype=np.intp)
    for i in range(n):
        d2 = ((R - Q[i]) ** 2).sum(axis=1)
        j = int(np.argmin(d2))
        dists[i] = d2[j]
        indices[i] = j
    return dists, indices
