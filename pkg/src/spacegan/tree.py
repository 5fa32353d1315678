"""CART regression tree (greedy squared-error splits) used as the ensemble base learner."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from spacegan.errors import ShapeError

# gains within this relative margin of the best count as tied; ties go to the
# lowest feature, then the lowest threshold
GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = 12
    min_samples_leaf: int = 2


@dataclass
class RegressionTree:
    """Flat node arrays; ``feature[k] == -1`` marks a leaf.

    A sample goes left when ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            k, d = stack.pop()
            best = max(best, d)
            if self.feature[k] >= 0:
                stack += [(self.left[k], d + 1), (self.right[k], d + 1)]
        return best

    def predict(self, X) -> np.ndarray:
        return tree_predict(self, X)

    def to_rows(self):
        for k in range(self.n_nodes):
            yield [k, int(self.feature[k]), repr(float(self.threshold[k])), int(self.left[k]), int(self.right[k]), repr(float(self.value[k]))]


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int):
    """Best ``(feature, threshold, gain)`` by squared-error reduction, or ``None``.

    Thresholds are midpoints between consecutive distinct sorted values.
    Ties go to the lowest feature index, then the lowest threshold.
    """
    n, d = X.shape
    total, total_sq = y.sum(), (y**2).sum()
    parent_sse = total_sq - total**2 / n
    tol = GAIN_RTOL * max(abs(parent_sse), 1.0)
    per_feature = []
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        csum = np.cumsum(ys)[:-1]
        csq = np.cumsum(ys**2)[:-1]
        n_left = np.arange(1, n)
        n_right = n - n_left
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        sse_left = csq - csum**2 / n_left
        sse_right = (total_sq - csq) - (total - csum) ** 2 / n_right
        gain = np.where(valid, parent_sse - sse_left - sse_right, -np.inf)
        per_feature.append((xs, gain))
    if not per_feature:
        return None
    top = max((g.max() if g.size else -np.inf) for _, g in per_feature)
    if not top > tol:
        return None
    for f, (xs, gain) in enumerate(per_feature):
        hits = np.flatnonzero(gain >= top - tol)
        if hits.size:
            pos = int(hits[0])
            return f, 0.5 * (xs[pos] + xs[pos + 1]), float(gain[pos])
    return None


def tree_fit(X, y, params: TreeParams = TreeParams()) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ShapeError(f"need n >= 1 matching rows, got X {X.shape} and y {y.shape}")
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(value) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if len(idx) < 2 * params.min_samples_leaf:
            continue
        ys = y[idx]
        if np.all(ys == ys[0]):
            continue
        split = best_split(X[idx], ys, params.min_samples_leaf)
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(li), new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return RegressionTree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.asarray(value, dtype=float),
        n_features=X.shape[1],
    )


def tree_predict(tree: RegressionTree, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, tree.n_features) if X.size else X.reshape(0, tree.n_features)
    if X.shape[1] != tree.n_features:
        raise ShapeError(f"tree was fit on {tree.n_features} features, got {X.shape[1]}")
    node = np.zeros(len(X), dtype=int)
    active = tree.feature[node] >= 0
    while active.any():
        k = node[active]
        rows = np.flatnonzero(active)
        goes_left = X[rows, tree.feature[k]] <= tree.threshold[k]
        node[rows] = np.where(goes_left, tree.left[k], tree.right[k])
        active = tree.feature[node] >= 0
    return tree.value[node]


TREE_HEADER = ["node", "feature", "threshold", "left", "right", "value"]


def write_tree_csv(tree: RegressionTree, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TREE_HEADER)
        writer.writerows(tree.to_rows())


def tree_from_rows(rows, n_features: int) -> RegressionTree:
    rows = sorted(rows, key=lambda r: int(r[0]))
    return RegressionTree(
        feature=np.array([int(r[1]) for r in rows]),
        threshold=np.array([float(r[2]) for r in rows]),
        left=np.array([int(r[3]) for r in rows]),
        right=np.array([int(r[4]) for r in rows]),
        value=np.array([float(r[5]) for r in rows]),
        n_features=n_features,
    )
