import numpy as np
from numba import njit


@njit(cache=True)
def knn_mean(Z_train, y_train, Z_query, k):
    """Mean target of the k nearest training rows for every query row.

    Distance ties are resolved toward the lower training index: a candidate
    only displaces the current k-th neighbour when it is strictly closer.
    """
    n, d = Z_train.shape
    m = Z_query.shape[0]
    k = min(k, n)
    out = np.empty(m)
    best_d = np.empty(k)
    best_i = np.empty(k, np.int64)
    for q in range(m):
        count = 0
        for j in range(n):
            dist = 0.0
            for f in range(d):
                diff = Z_train[j, f] - Z_query[q, f]
                dist += diff * diff
            if count < k:
                pos = count
                count += 1
            elif dist < best_d[k - 1]:
                pos = k - 1
            else:
                continue
            # insertion keeps equal distances in index order
            while pos > 0 and best_d[pos - 1] > dist:
                best_d[pos] = best_d[pos - 1]
                best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = dist
            best_i[pos] = j
        acc = 0.0
        for t in range(k):
            acc += y_train[best_i[t]]
        out[q] = acc / k
    return out
