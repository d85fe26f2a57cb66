"""Tree growing and evaluation kernels.

Trees are grown from additive per-row statistics ``S`` (n_rows, m):

* gini:     S = class weights (one-hot times sample weight); score = sum(T^2)/W
* variance: S = [w, w*r];                                    score = (sum wr)^2 / sum w
* newton:   S = [g, h];                                      score = G^2 / (H + lam)

so a split's gain is ``score(left) + score(right) - score(parent)`` for every
mode. Random choices (feature subsets, extra-trees thresholds) are read in
order from a pre-drawn uniform buffer, which lets the numba and numpy paths
build bit-identical trees.
"""

from __future__ import annotations

import numpy as np

from .._jit import USE_NUMBA, njit

MODE_GINI, MODE_VARIANCE, MODE_NEWTON = 0, 1, 2


@njit
def _score(T, mode, lam):
    if mode == 0:
        W = 0.0
        for k in range(T.shape[0]):
            W += T[k]
        if W <= 0.0:
            return 0.0
        acc = 0.0
        for k in range(T.shape[0]):
            acc += T[k] * T[k]
        return acc / W
    if mode == 1:
        if T[0] <= 0.0:
            return 0.0
        return T[1] * T[1] / T[0]
    return T[0] * T[0] / (T[1] + lam)


@njit
def _leaf_value(T, mode, lam, out):
    if mode == 0:
        W = 0.0
        for k in range(T.shape[0]):
            W += T[k]
        for k in range(T.shape[0]):
            out[k] = T[k] / W if W > 0.0 else 1.0 / T.shape[0]
    elif mode == 1:
        out[0] = T[1] / T[0] if T[0] > 0.0 else 0.0
    else:
        out[0] = -T[0] / (T[1] + lam)


@njit
def build_tree_nb(X, S, rows, mode, lam, max_depth, min_leaf, max_features, extra, rand):
    n = rows.shape[0]
    d = X.shape[1]
    m = S.shape[1]
    vdim = m if mode == 0 else 1
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, vdim))

    idx = rows.copy()
    scratch = np.empty(n, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    tot = np.empty(m)
    cum = np.empty(m)
    rest = np.empty(m)
    leaf = np.empty(vdim)
    vals = np.empty(n)
    nr = rand.shape[0]
    rp = 0

    sp = 1
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]
        n_node = hi - lo

        for c in range(m):
            tot[c] = 0.0
        for i in range(lo, hi):
            r = idx[i]
            for c in range(m):
                tot[c] += S[r, c]
        _leaf_value(tot, mode, lam, leaf)
        for c in range(vdim):
            value[node, c] = leaf[c]

        if depth >= max_depth or n_node < 2 * min_leaf:
            continue
        if mode == 0:
            n_pos = 0
            for c in range(m):
                if tot[c] > 0.0:
                    n_pos += 1
            if n_pos <= 1:
                continue

        parent = _score(tot, mode, lam)
        best_gain = 1e-12 * abs(parent)
        best_f = -1
        best_thr = 0.0
        best_nl = 0

        if max_features < d:
            keys = np.empty(d)
            for j in range(d):
                keys[j] = rand[rp % nr]
                rp += 1
            chosen = np.sort(np.argsort(keys, kind="mergesort")[:max_features])
        else:
            chosen = np.arange(d)

        for f in chosen:
            if extra:
                u = rand[rp % nr]
                rp += 1
                vmin = X[idx[lo], f]
                vmax = vmin
                for i in range(lo, hi):
                    v = X[idx[i], f]
                    if v < vmin:
                        vmin = v
                    if v > vmax:
                        vmax = v
                if not vmax > vmin:
                    continue
                thr = vmin + u * (vmax - vmin)
                if thr >= vmax:
                    continue
                for c in range(m):
                    cum[c] = 0.0
                nl = 0
                for i in range(lo, hi):
                    r = idx[i]
                    if X[r, f] <= thr:
                        nl += 1
                        for c in range(m):
                            cum[c] += S[r, c]
                if nl < min_leaf or n_node - nl < min_leaf:
                    continue
                for c in range(m):
                    rest[c] = tot[c] - cum[c]
                gain = _score(cum, mode, lam) + _score(rest, mode, lam) - parent
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = thr
                    best_nl = nl
            else:
                for i in range(n_node):
                    vals[i] = X[idx[lo + i], f]
                order = np.argsort(vals[:n_node], kind="mergesort")
                for c in range(m):
                    cum[c] = 0.0
                for i in range(n_node - 1):
                    r = idx[lo + order[i]]
                    for c in range(m):
                        cum[c] += S[r, c]
                    nl = i + 1
                    if nl < min_leaf:
                        continue
                    if n_node - nl < min_leaf:
                        break
                    v = vals[order[i]]
                    vn = vals[order[i + 1]]
                    if not vn > v:
                        continue
                    for c in range(m):
                        rest[c] = tot[c] - cum[c]
                    gain = _score(cum, mode, lam) + _score(rest, mode, lam) - parent
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        thr = 0.5 * (v + vn)
                        if thr >= vn:
                            thr = v
                        best_thr = thr
                        best_nl = nl

        if best_f < 0:
            continue
        # stable partition: rows going left keep their order, then rows going right
        a = lo
        b = 0
        for i in range(lo, hi):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                idx[a] = r
                a += 1
            else:
                scratch[b] = r
                b += 1
        for i in range(b):
            idx[a + i] = scratch[i]

        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lchild
        right[node] = rchild
        st_node[sp] = rchild
        st_lo[sp] = lo + best_nl
        st_hi[sp] = hi
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lchild
        st_lo[sp] = lo
        st_hi[sp] = lo + best_nl
        st_depth[sp] = depth + 1
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def _score_np(T, mode, lam):
    """Row-wise score of a (k, m) block of statistics."""
    if mode == MODE_GINI:
        W = T.sum(axis=1)
        acc = (T * T).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(W > 0.0, acc / W, 0.0)
    if mode == MODE_VARIANCE:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(T[:, 0] > 0.0, T[:, 1] * T[:, 1] / T[:, 0], 0.0)
    return T[:, 0] * T[:, 0] / (T[:, 1] + lam)


def _leaf_np(T, mode, lam):
    if mode == MODE_GINI:
        W = T.sum()
        return T / W if W > 0.0 else np.full(T.shape[0], 1.0 / T.shape[0])
    if mode == MODE_VARIANCE:
        return np.array([T[1] / T[0] if T[0] > 0.0 else 0.0])
    return np.array([-T[0] / (T[1] + lam)])


def build_tree_numpy(X, S, rows, mode, lam, max_depth, min_leaf, max_features, extra, rand):
    """Same algorithm as the numba kernel with the split scan vectorised."""
    n, d = rows.shape[0], X.shape[1]
    idx = np.array(rows, dtype=np.int64)
    nr = rand.shape[0]
    rp = 0
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [None]
    stack = [(0, 0, n, 0)]
    while stack:
        node, lo, hi, depth = stack.pop()
        n_node = hi - lo
        rows_here = idx[lo:hi]
        S_node = S[rows_here]
        tot = np.cumsum(S_node, axis=0)[-1]
        value[node] = _leaf_np(tot, mode, lam)
        if depth >= max_depth or n_node < 2 * min_leaf:
            continue
        if mode == MODE_GINI and np.count_nonzero(tot > 0.0) <= 1:
            continue
        parent = _score_np(tot[None, :], mode, lam)[0]
        best_gain = 1e-12 * abs(parent)
        best = None

        if max_features < d:
            keys = rand[np.arange(rp, rp + d) % nr]
            rp += d
            chosen = np.sort(np.argsort(keys, kind="stable")[:max_features])
        else:
            chosen = np.arange(d)

        for f in chosen:
            col = X[rows_here, f]
            if extra:
                u = rand[rp % nr]
                rp += 1
                vmin, vmax = col.min(), col.max()
                if not vmax > vmin:
                    continue
                thr = vmin + u * (vmax - vmin)
                if thr >= vmax:
                    continue
                mask = col <= thr
                nl = int(mask.sum())
                if nl < min_leaf or n_node - nl < min_leaf:
                    continue
                cum = np.cumsum(S_node[mask], axis=0)[-1]
                gain = (_score_np(cum[None, :], mode, lam) + _score_np((tot - cum)[None, :], mode, lam))[0] - parent
                if gain > best_gain:
                    best_gain, best = gain, (f, thr, nl)
            else:
                order = np.argsort(col, kind="stable")
                sv = col[order]
                cum = np.cumsum(S_node[order], axis=0)[:-1]
                nl = np.arange(1, n_node)
                ok = (nl >= min_leaf) & (n_node - nl >= min_leaf) & (sv[1:] > sv[:-1])
                if not ok.any():
                    continue
                gains = _score_np(cum, mode, lam) + _score_np(tot[None, :] - cum, mode, lam) - parent
                gains = np.where(ok, gains, -np.inf)
                i = int(np.argmax(gains))
                if gains[i] > best_gain:
                    v, vn = sv[i], sv[i + 1]
                    thr = 0.5 * (v + vn)
                    if thr >= vn:
                        thr = v
                    best_gain, best = gains[i], (f, thr, i + 1)
        if best is None:
            continue
        f, thr, nl = best
        go_left = X[rows_here, f] <= thr
        idx[lo:hi] = np.concatenate((rows_here[go_left], rows_here[~go_left]))
        lchild, rchild = len(feature), len(feature) + 1
        for lst, a, b in ((feature, -1, -1), (threshold, 0.0, 0.0), (left, -1, -1), (right, -1, -1), (value, None, None)):
            lst.extend((a, b))
        feature[node], threshold[node], left[node], right[node] = f, thr, lchild, rchild
        stack.append((rchild, lo + nl, hi, depth + 1))
        stack.append((lchild, lo, lo + nl, depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64), np.vstack(value))


def build_tree(X, S, rows, mode, lam=0.0, max_depth=12, min_leaf=1, max_features=None, extra=False, rand=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    rows = np.arange(X.shape[0], dtype=np.int64) if rows is None else np.ascontiguousarray(rows, dtype=np.int64)
    d = X.shape[1]
    max_features = d if max_features is None else int(max_features)
    if rand is None or rand.shape[0] == 0:
        rand = np.zeros(1)
    args = (X, S, rows, int(mode), float(lam), int(max_depth), int(min_leaf), max_features, bool(extra),
            np.ascontiguousarray(rand, dtype=np.float64))
    if USE_NUMBA:
        return build_tree_nb(*args)
    return build_tree_numpy(*args)


@njit
def forest_reduce_nb(X, feature, threshold, left, right, value, roots, out_col, weight, n_out):
    n = X.shape[0]
    vdim = value.shape[1]
    out = np.zeros((n, n_out))
    for i in range(n):
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            w = weight[t]
            c0 = out_col[t]
            for k in range(vdim):
                out[i, c0 + k] += w * value[node, k]
    return out


def forest_reduce_numpy(X, feature, threshold, left, right, value, roots, out_col, weight, n_out):
    n = X.shape[0]
    vdim = value.shape[1]
    out = np.zeros((n, n_out))
    rows = np.arange(n)
    for t in range(roots.shape[0]):
        node = np.full(n, roots[t], dtype=np.int64)
        while True:
            f = feature[node]
            internal = f >= 0
            if not internal.any():
                break
            fi = np.where(internal, f, 0)
            go_left = X[rows, fi] <= threshold[node]
            node = np.where(internal, np.where(go_left, left[node], right[node]), node)
        out[:, out_col[t]:out_col[t] + vdim] += weight[t] * value[node]
    return out


def forest_reduce(X, packed, out_col, weight, n_out):
    """Weighted sum of leaf values: ``out[:, out_col[t]:+vdim] += weight[t] * leaf_t(x)``."""
    feature, threshold, left, right, value, roots = packed
    args = (np.ascontiguousarray(X, dtype=np.float64), feature, threshold, left, right, value, roots,
            np.ascontiguousarray(out_col, dtype=np.int64), np.ascontiguousarray(weight, dtype=np.float64), int(n_out))
    if USE_NUMBA:
        return forest_reduce_nb(*args)
    return forest_reduce_numpy(*args)
