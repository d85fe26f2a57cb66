"""Brute-force k-nearest-neighbour search.

Distance ties go to the lower training-row index. The numba kernel keeps a
sorted top-k buffer per query; the numpy path uses a stable argsort on
chunks of the distance matrix.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit


@njit
def _knn_kernel(train, query, k, exclude):
    nq = query.shape[0]
    nt = train.shape[0]
    d = train.shape[1]
    out = np.empty((nq, k), dtype=np.int64)
    best_d = np.empty(k)
    best_i = np.empty(k, dtype=np.int64)
    for q in range(nq):
        m = 0
        for j in range(nt):
            if j == exclude[q]:
                continue
            dist = 0.0
            for c in range(d):
                diff = train[j, c] - query[q, c]
                dist += diff * diff
            if m == k and dist >= best_d[k - 1]:
                continue
            # insertion keeps equal distances in index order
            pos = m if m < k else k - 1
            while pos > 0 and best_d[pos - 1] > dist:
                if pos < k:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = dist
            best_i[pos] = j
            if m < k:
                m += 1
        for r in range(k):
            out[q, r] = best_i[r]
    return out


def _knn_numpy(train, query, k, exclude, chunk=256):
    out = np.empty((query.shape[0], k), dtype=np.int64)
    for lo in range(0, query.shape[0], chunk):
        q = query[lo:lo + chunk]
        # accumulate column by column, in the kernel's order, so both paths
        # round identically and break near-ties the same way
        dist = np.zeros((q.shape[0], train.shape[0]))
        for c in range(train.shape[1]):
            diff = train[None, :, c] - q[:, c, None]
            dist += diff * diff
        ex = exclude[lo:lo + chunk]
        rows = np.nonzero(ex >= 0)[0]
        dist[rows, ex[rows]] = np.inf
        out[lo:lo + chunk] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


def kneighbors(train: np.ndarray, query: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices (n_query, k) of the nearest training rows by Euclidean distance.

    With ``exclude_self`` the query set must be the training set and row i
    never counts as its own neighbour.
    """
    train = np.ascontiguousarray(train, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    if train.shape[0] == 0:
        raise ValueError("empty training set")
    available = train.shape[0] - (1 if exclude_self else 0)
    if not 1 <= k <= available:
        raise ValueError(f"k={k} must be in [1, {available}]")
    if exclude_self:
        exclude = np.arange(query.shape[0], dtype=np.int64)
    else:
        exclude = np.full(query.shape[0], -1, dtype=np.int64)
    if USE_NUMBA:
        return _knn_kernel(train, query, k, exclude)
    return _knn_numpy(train, query, k, exclude)
