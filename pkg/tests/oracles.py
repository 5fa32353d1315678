"""Independent brute-force references used by the test-suite.

Written without reference to the package's vectorized code paths.
"""

import math

import numpy as np


def lisa_loop(y, w):
    """Local Moran's I by literal double loop over the defining sum."""
    n = len(y)
    ybar = sum(y) / n
    out = []
    for i in range(n):
        denom = 0.0
        lag = 0.0
        for j in range(n):
            if j == i:
                continue
            denom += (y[j] - ybar) ** 2
            lag += w[i][j] * (y[j] - ybar)
        out.append((n - 1) * (y[i] - ybar) / denom * lag)
    return np.array(out)


def knn_bruteforce(coords, k):
    """All-pairs distances, sorted by (distance, index)."""
    n = len(coords)
    result = []
    for i in range(n):
        cand = []
        for j in range(n):
            if j != i:
                d = math.hypot(coords[i][0] - coords[j][0], coords[i][1] - coords[j][1])
                cand.append((d, j))
        cand.sort()
        result.append(tuple(j for _, j in cand[:k]))
    return result


def sse(values):
    if len(values) == 0:
        return 0.0
    mu = sum(values) / len(values)
    return sum((v - mu) ** 2 for v in values)


def tree_bruteforce(X, y, max_depth, min_leaf, rtol=1e-12):
    """Exhaustive CART: every feature, every midpoint, SSE evaluated directly.

    Returns a nested tuple ``("leaf", mean)`` or ``("split", f, thr, left, right)``.
    """
    X = [list(map(float, row)) for row in X]
    y = [float(v) for v in y]

    def build(idx, depth):
        ys = [y[i] for i in idx]
        mean = sum(ys) / len(ys)
        if depth >= max_depth or len(idx) < 2 * min_leaf or all(v == ys[0] for v in ys):
            return ("leaf", mean)
        parent = sse(ys)
        cands = []
        for f in range(len(X[0])):
            vals = sorted(set(X[i][f] for i in idx))
            for a, b in zip(vals, vals[1:]):
                thr = 0.5 * (a + b)
                left = [i for i in idx if X[i][f] <= thr]
                right = [i for i in idx if X[i][f] > thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                gain = parent - sse([y[i] for i in left]) - sse([y[i] for i in right])
                cands.append((f, thr, gain, left, right))
        if not cands:
            return ("leaf", mean)
        tol = rtol * max(abs(parent), 1.0)
        top = max(c[2] for c in cands)
        if not top > tol:
            return ("leaf", mean)
        f, thr, _, left, right = next(c for c in cands if c[2] >= top - tol)
        return ("split", f, thr, build(left, depth + 1), build(right, depth + 1))

    return build(list(range(len(y))), 0)
