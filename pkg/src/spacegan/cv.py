"""Spatial k-fold cross-validation: equal-width strips per axis plus a neighbour buffer."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from spacegan.errors import EmptyFoldError, ShapeError
from spacegan.weights import NeighborhoodGraph


@dataclass(frozen=True)
class Fold:
    test: np.ndarray
    train: np.ndarray
    buffer: np.ndarray
    axis: int
    bin_index: int
    bounds: tuple[float, float]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return len(self.folds)

    def __getitem__(self, k):
        return self.folds[k]

    def to_csv(self, path) -> None:
        """One row per (point, fold): ``index, fold, role``."""
        rows = []
        for k, fold in enumerate(self.folds):
            for role, idx in (("train", fold.train), ("buffer", fold.buffer), ("test", fold.test)):
                rows.extend((int(i), k, role) for i in idx)
        rows.sort()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "fold", "role"])
            writer.writerows(rows)


def spatial_folds(coords, graph: NeighborhoodGraph, bins_per_axis: int = 5) -> FoldPlan:
    """Slice each coordinate axis into ``bins_per_axis`` equal-width strips.

    Each strip is a test set; its training set drops the test points and
    every neighbour ``N_j`` of a test point ``j``. Bins are half-open except
    the last, which is closed above. Folds are ordered axis 0 bins first.
    """
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if coords.shape != (n, 2) or graph.n != n:
        raise ShapeError(f"coords {coords.shape} and graph over {graph.n} points disagree")
    if bins_per_axis < 1 or n < 2 * bins_per_axis:
        raise ValueError(f"need n >= 2 * bins_per_axis, got n={n}, bins={bins_per_axis}")

    folds = []
    all_idx = np.arange(n)
    for axis in (0, 1):
        v = coords[:, axis]
        lo, hi = float(v.min()), float(v.max())
        width = (hi - lo) / bins_per_axis
        if width > 0:
            b = np.floor((v - lo) / width).astype(int)
            b = np.clip(b, 0, bins_per_axis - 1)
        else:
            b = np.zeros(n, dtype=int)
        for k in range(bins_per_axis):
            test = all_idx[b == k]
            if test.size == 0:
                raise EmptyFoldError(f"axis {axis} bin {k} is empty", axis=axis, bin_index=k)
            in_test = np.zeros(n, dtype=bool)
            in_test[test] = True
            in_buffer = np.zeros(n, dtype=bool)
            for j in test:
                in_buffer[list(graph.neighbors[j])] = True
            in_buffer &= ~in_test
            train = all_idx[~in_test & ~in_buffer]
            folds.append(
                Fold(
                    test=test,
                    train=train,
                    buffer=all_idx[in_buffer],
                    axis=axis,
                    bin_index=k,
                    bounds=(lo + k * width, lo + (k + 1) * width),
                )
            )
    return FoldPlan(tuple(folds))


def buffer_violations(fold: Fold, graph: NeighborhoodGraph) -> int:
    """Count (test j, train i) pairs with ``i`` in ``N_j``."""
    train = set(int(i) for i in fold.train)
    return sum(1 for j in fold.test for i in graph.neighbors[int(j)] if i in train)
