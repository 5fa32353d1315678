"""Bagged regression-tree ensembles trained on GAN draws, GP posterior draws, or block bootstraps.

Every member ``b`` uses its own random stream ``(seed, b)`` so members can be
fitted in any order with identical results. Members see the real features
with the coordinates appended as two extra columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spacegan.datasets import SpatialDataset
from spacegan.errors import ShapeError
from spacegan.gan import TrainedSpaceGan, sample
from spacegan.gp import SpatialGp
from spacegan.tree import TREE_HEADER, RegressionTree, TreeParams, tree_fit, tree_from_rows, tree_predict
from spacegan.weights import NeighborhoodGraph

ENSEMBLE_FORMAT_VERSION = 1
PROVENANCE = ("ganning", "gp_bag", "spatial_boot")


def design_matrix(data: SpatialDataset) -> np.ndarray:
    """``[x, c1, c2]`` columns fed to the base learners."""
    return np.column_stack([data.features, data.coords])


@dataclass
class Ensemble:
    members: list[RegressionTree]
    provenance: str

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        if len({m.n_features for m in self.members}) != 1:
            raise ShapeError("ensemble members disagree on feature dimensionality")

    @property
    def n_features(self) -> int:
        return self.members[0].n_features

    def member_predictions(self, X) -> np.ndarray:
        return np.stack([tree_predict(m, X) for m in self.members])

    def predict(self, X) -> np.ndarray:
        return ensemble_predict(self, X)

    def to_csv(self, path) -> None:
        """Versioned node list: one row per (member, node)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["# spacegan-ensemble", ENSEMBLE_FORMAT_VERSION, self.provenance, self.n_features])
            writer.writerow(["member", *TREE_HEADER])
            for b, tree in enumerate(self.members):
                for row in tree.to_rows():
                    writer.writerow([b, *row])

    @classmethod
    def from_csv(cls, path) -> "Ensemble":
        with open(Path(path), newline="") as fh:
            reader = csv.reader(fh)
            magic, version, provenance, n_features = next(reader)
            if magic != "# spacegan-ensemble" or int(version) != ENSEMBLE_FORMAT_VERSION:
                raise ValueError(f"{path}: not a version {ENSEMBLE_FORMAT_VERSION} ensemble file")
            next(reader)
            rows: dict[int, list] = {}
            for rec in reader:
                rows.setdefault(int(rec[0]), []).append(rec[1:])
        members = [tree_from_rows(rows[b], int(n_features)) for b in sorted(rows)]
        return cls(members, provenance)


def ensemble_predict(ens: Ensemble, X) -> np.ndarray:
    """Unweighted mean of member predictions."""
    return ens.member_predictions(X).mean(axis=0)


def ganning(
    model: TrainedSpaceGan,
    data: SpatialDataset,
    graph: NeighborhoodGraph,
    B: int,
    seed: int,
    params: TreeParams = TreeParams(),
) -> Ensemble:
    """One tree per generated dataset: real ``(x, c)`` paired with generated ``y_hat``.

    Generated features are drawn alongside but not used for fitting.
    """
    X = design_matrix(data)
    members = [tree_fit(X, y_hat, params) for _, y_hat in sample(model, data, graph, B, seed)]
    return Ensemble(members, "ganning")


def gp_bagging(gp: SpatialGp, data: SpatialDataset, B: int, seed: int, params: TreeParams = TreeParams()) -> Ensemble:
    """One tree per joint GP posterior draw at the training locations."""
    X = design_matrix(data)
    members = []
    for b in range(B):
        y_b = gp.sample(data.coords, 1, np.random.default_rng([seed, b]))[0]
        members.append(tree_fit(X, y_b, params))
    return Ensemble(members, "gp_bag")


def block_bootstrap_indices(graph: NeighborhoodGraph, rng) -> np.ndarray:
    """Resample ``n`` rows as whole ``{i} + N_i`` blocks around uniform seed points."""
    n = graph.n
    rows: list[int] = []
    while len(rows) < n:
        i = int(rng.integers(n))
        rows.append(i)
        rows.extend(graph.neighbors[i])
    return np.asarray(rows[:n], dtype=int)


def spatial_bootstrap(
    data: SpatialDataset,
    graph: NeighborhoodGraph,
    B: int,
    seed: int,
    params: TreeParams = TreeParams(),
) -> Ensemble:
    X = design_matrix(data)
    members = []
    for b in range(B):
        idx = block_bootstrap_indices(graph, np.random.default_rng([seed, b]))
        members.append(tree_fit(X[idx], data.target[idx], params))
    return Ensemble(members, "spatial_boot")
