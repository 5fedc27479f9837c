"""Regression forest kernels compiled with numba.

Trees are grown on a bootstrap sample with the presorted CART scheme: each
feature keeps its own sorted index array and every split stably partitions all
of them, so a level of the tree costs O(n * d) rather than O(n log n).
Split quality is the reduction in within-node sum of squares.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _grow_tree(X, y, presorted, seed, mtry, min_leaf, feat, thr, left, right, value):
    n, d = X.shape
    np.random.seed(seed)
    counts = np.zeros(n, np.int64)
    for i in range(n):
        counts[np.random.randint(0, n)] += 1
    # bootstrap draws grouped by source row; first[i] is the first draw of row i
    first = np.empty(n, np.int64)
    Xb = np.empty((n, d))
    yb = np.empty(n)
    pos = 0
    for i in range(n):
        first[i] = pos
        for c in range(counts[i]):
            yb[pos] = y[i]
            for f in range(d):
                Xb[pos, f] = X[i, f]
            pos += 1

    # sorted order of the draws follows from the forest-level presort
    order = np.empty((d, n), np.int64)
    for f in range(d):
        pos = 0
        for r in range(n):
            i = presorted[f, r]
            for c in range(counts[i]):
                order[f, pos] = first[i] + c
                pos += 1

    inv = np.empty(n + 1)
    inv[0] = 0.0
    for k in range(1, n + 1):
        inv[k] = 1.0 / k

    goes_left = np.zeros(n, np.bool_)
    buf = np.empty(n, np.int64)
    features = np.arange(d)

    # explicit stack of (start, end, node id)
    stack = np.empty((2 * n + 2, 3), np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        node = stack[top, 2]
        size = end - start

        total = 0.0
        for k in range(start, end):
            total += yb[order[0, k]]
        value[node] = total / size
        feat[node] = -1
        left[node] = -1
        right[node] = -1
        if size < 2 * min_leaf:
            continue

        parent_score = total * total * inv[size]
        best_gain = 1e-12 * (abs(parent_score) + 1.0)
        best_f = -1
        best_pos = -1
        best_thr = 0.0

        # partial Fisher-Yates draw of mtry candidate features
        for j in range(mtry):
            r = j + np.random.randint(0, d - j)
            tmp = features[j]
            features[j] = features[r]
            features[r] = tmp
        for j in range(mtry):
            f = features[j]
            cum = 0.0
            for k in range(start, end - 1):
                idx = order[f, k]
                cum += yb[idx]
                n_left = k - start + 1
                if n_left < min_leaf:
                    continue
                n_right = size - n_left
                if n_right < min_leaf:
                    break
                v = Xb[idx, f]
                v_next = Xb[order[f, k + 1], f]
                if v_next <= v:
                    continue
                rest = total - cum
                gain = cum * cum * inv[n_left] + rest * rest * inv[n_right] - parent_score
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_pos = k
                    best_thr = 0.5 * (v + v_next)
                    if best_thr >= v_next:
                        best_thr = v

        if best_f < 0:
            continue

        for k in range(start, end):
            goes_left[order[best_f, k]] = k <= best_pos
        n_left = best_pos - start + 1
        for f in range(d):
            a = start
            b = 0
            for k in range(start, end):
                idx = order[f, k]
                if goes_left[idx]:
                    order[f, a] = idx
                    a += 1
                else:
                    buf[b] = idx
                    b += 1
            for k in range(b):
                order[f, a + k] = buf[k]

        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = lchild
        right[node] = rchild
        # push right first so the left subtree is expanded first
        stack[top, 0] = start + n_left
        stack[top, 1] = end
        stack[top, 2] = rchild
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + n_left
        stack[top, 2] = lchild
        top += 1

    return n_nodes


@njit(cache=True)
def fit_forest(X, y, seeds, mtry, min_leaf):
    n = X.shape[0]
    n_trees = seeds.shape[0]
    cap = 2 * (n // min_leaf) + 3
    feat = np.empty((n_trees, cap), np.int64)
    thr = np.empty((n_trees, cap))
    left = np.empty((n_trees, cap), np.int64)
    right = np.empty((n_trees, cap), np.int64)
    value = np.empty((n_trees, cap))
    sizes = np.empty(n_trees, np.int64)
    d = X.shape[1]
    presorted = np.empty((d, n), np.int64)
    for f in range(d):
        presorted[f] = np.argsort(X[:, f], kind="mergesort")
    for t in range(n_trees):
        sizes[t] = _grow_tree(X, y, presorted, seeds[t], mtry, min_leaf,
                              feat[t], thr[t], left[t], right[t], value[t])
    return feat, thr, left, right, value, sizes


@njit(cache=True)
def predict_forest(X, feat, thr, left, right, value):
    m = X.shape[0]
    n_trees = feat.shape[0]
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for t in range(n_trees):
            node = 0
            while feat[t, node] >= 0:
                if X[i, feat[t, node]] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            acc += value[t, node]
        out[i] = acc / n_trees
    return out
