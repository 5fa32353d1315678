"""Neighbourhood graphs (queen grid adjacency, k-nearest neighbours) and binary weights.

Indices are 0-based throughout. Neighbour lists carry a canonical order:
row-major ascending for queen graphs, ascending distance (ties by index) for
kNN graphs. The order fixes the slot layout of the conditioning tensors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from spacegan.errors import InvalidDimensionError, InvalidKError, ShapeError

QUEEN_CAPACITY = 8


@dataclass(frozen=True)
class NeighborhoodGraph:
    """Ordered neighbour sets ``N_i`` for ``n`` points.

    Attributes
    ----------
    neighbors : tuple of tuple of int
        ``neighbors[i]`` is the ordered neighbour list of point ``i``.
    kind : str
        ``"queen"`` or ``"knn"``.
    k : int or None
        Neighbour count for kNN graphs.
    """

    neighbors: tuple[tuple[int, ...], ...]
    kind: str
    k: int | None = None

    def __post_init__(self):
        n = len(self.neighbors)
        for i, nb in enumerate(self.neighbors):
            if i in nb:
                raise ValueError(f"point {i} lists itself as a neighbour")
            if len(set(nb)) != len(nb):
                raise ValueError(f"duplicate neighbours for point {i}")
            if any(j < 0 or j >= n for j in nb):
                raise ValueError(f"neighbour index out of range for point {i}")

    @property
    def n(self) -> int:
        return len(self.neighbors)

    @property
    def capacity(self) -> int:
        """Fixed number of conditioning slots (8 for queen, k for kNN)."""
        if self.kind == "queen":
            return QUEEN_CAPACITY
        return int(self.k)

    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=int)

    def subgraph(self, indices) -> "NeighborhoodGraph":
        """Induced subgraph on ``indices``, relabelled to ``0..len(indices)-1``.

        Neighbours outside ``indices`` are dropped; the relative order of the
        remaining ones is kept.
        """
        indices = np.asarray(indices, dtype=int)
        relabel = {int(old): new for new, old in enumerate(indices)}
        nbrs = tuple(
            tuple(relabel[j] for j in self.neighbors[int(i)] if j in relabel) for i in indices
        )
        return NeighborhoodGraph(nbrs, self.kind, self.k)

    def to_csv(self, path) -> None:
        """Write ``i, ordinal, j`` rows (0-based)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "ordinal", "j"])
            for i, nb in enumerate(self.neighbors):
                for ordinal, j in enumerate(nb):
                    writer.writerow([i, ordinal, j])

    @classmethod
    def from_csv(cls, path, n: int, kind: str, k: int | None = None) -> "NeighborhoodGraph":
        rows: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        with open(Path(path), newline="") as fh:
            for rec in csv.DictReader(fh):
                rows[int(rec["i"])].append((int(rec["ordinal"]), int(rec["j"])))
        return cls(tuple(tuple(j for _, j in sorted(r)) for r in rows), kind, k)


def queen_graph(rows: int, cols: int) -> NeighborhoodGraph:
    """Queen adjacency on a ``rows x cols`` grid indexed row-major.

    >>> g = queen_graph(3, 3)
    >>> g.neighbors[4]
    (0, 1, 2, 3, 5, 6, 7, 8)
    """
    if rows < 1 or cols < 1:
        raise InvalidDimensionError(f"grid must be at least 1x1, got {rows}x{cols}")
    nbrs = []
    for r in range(rows):
        for c in range(cols):
            cell = []
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        cell.append(rr * cols + cc)
            nbrs.append(tuple(sorted(cell)))
    return NeighborhoodGraph(tuple(nbrs), "queen")


def _pairwise_row(coords: np.ndarray, i: int) -> np.ndarray:
    diff = coords - coords[i]
    return np.sqrt(diff[:, 0] ** 2 + diff[:, 1] ** 2)


def _knn_row_exact(coords: np.ndarray, i: int, k: int) -> tuple[int, ...]:
    d = _pairwise_row(coords, i)
    d[i] = np.inf
    order = np.lexsort((np.arange(len(d)), d))
    return tuple(int(j) for j in order[:k])


def knn_graph(coords, k: int) -> NeighborhoodGraph:
    """Directed k-nearest-neighbour graph on planar Euclidean distance.

    Candidates come from a KD-tree; rows whose k-th distance ties with the
    next candidate fall back to an exact scan so the index tie-break holds.
    """
    coords = _as_coords(coords)
    n = len(coords)
    if k < 1 or k >= n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n-1 (n={n}), got {k}")
    if n <= 256:
        return NeighborhoodGraph(tuple(_knn_row_exact(coords, i, k) for i in range(n)), "knn", k)

    tree = cKDTree(coords)
    q = min(n, k + 2)
    _, cand = tree.query(coords, k=q)
    nbrs = []
    for i in range(n):
        c = np.array([j for j in cand[i] if j != i and j < n], dtype=int)
        diff = coords[c] - coords[i]
        d = np.sqrt(diff[:, 0] ** 2 + diff[:, 1] ** 2)
        order = np.lexsort((c, d))
        c, d = c[order], d[order]
        if len(c) <= k or d[k] <= d[k - 1] * (1 + 1e-12):
            nbrs.append(_knn_row_exact(coords, i, k))
        else:
            nbrs.append(tuple(int(j) for j in c[:k]))
    return NeighborhoodGraph(tuple(nbrs), "knn", k)


def restrict_graph(graph: NeighborhoodGraph, coords, indices) -> NeighborhoodGraph:
    """Neighbourhood structure of a subset of points.

    Queen graphs keep the induced adjacency; kNN graphs are rebuilt on the
    subset so every point keeps exactly ``k`` neighbours.
    """
    indices = np.asarray(indices, dtype=int)
    if graph.kind == "knn":
        sub = np.asarray(coords, dtype=float)[indices]
        return knn_graph(sub, min(int(graph.k), len(indices) - 1))
    return graph.subgraph(indices)


def to_weight_matrix(graph: NeighborhoodGraph) -> np.ndarray:
    """Dense binary ``n x n`` matrix with ``w[i, j] = 1`` iff ``j`` in ``N_i``."""
    n = graph.n
    w = np.zeros((n, n), dtype=float)
    for i, nb in enumerate(graph.neighbors):
        if nb:
            w[i, list(nb)] = 1.0
    return w


def _as_coords(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 1:
        raise ShapeError(f"coordinates must be an (n, 2) array with n >= 1, got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    return coords
