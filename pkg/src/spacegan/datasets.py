"""Synthetic grid datasets and the California Housing loader.

All randomness comes from numpy's ``PCG64`` bit generator seeded through
``np.random.default_rng(seed)``; the same seed yields bit-identical data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spacegan.errors import ParseError, SchemaError, ShapeError
from spacegan.stats import zscore

CALIFORNIA_COORDS = ("longitude", "latitude")
CALIFORNIA_FEATURES = (
    "housing_median_age",
    "total_rooms",
    "total_bedrooms",
    "population",
    "households",
    "median_income",
)
CALIFORNIA_TARGET = "median_house_value"


@dataclass(frozen=True)
class SpatialDataset:
    """``n`` points ``(x_i, y_i, c_i)``."""

    coords: np.ndarray
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    grid_shape: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.target.shape[0]
        if self.coords.shape != (n, 2):
            raise ShapeError(f"coords shape {self.coords.shape} does not match n={n}")
        if self.features.ndim != 2 or self.features.shape[0] != n or self.features.shape[1] < 1:
            raise ShapeError(f"features shape {self.features.shape} does not match n={n}")
        if len(self.feature_names) != self.features.shape[1]:
            raise ShapeError("one feature name per feature column required")
        for name, arr in (("coords", self.coords), ("features", self.features), ("target", self.target)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def n(self) -> int:
        return int(self.target.shape[0])

    @property
    def m(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices) -> "SpatialDataset":
        idx = np.asarray(indices, dtype=int)
        return SpatialDataset(self.coords[idx], self.features[idx], self.target[idx], self.feature_names)

    def to_csv(self, path) -> None:
        """Columns ``c1, c2, y, x1..xm``; floats written with ``repr`` for exact round-trips."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["c1", "c2", "y", *[f"x{k + 1}" for k in range(self.m)]])
            for i in range(self.n):
                row = [self.coords[i, 0], self.coords[i, 1], self.target[i], *self.features[i]]
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "SpatialDataset":
        """Read the ``c1, c2, y, x1..xm`` layout written by :meth:`to_csv`."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:3] != ["c1", "c2", "y"] or len(header) < 4:
                raise SchemaError(f"expected columns c1, c2, y, x1.. in {path}, got {header}")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                try:
                    rows.append([float(v) for v in rec])
                except ValueError as exc:
                    raise ParseError(f"{path}: row {lineno}: {exc}", row=lineno) from None
        arr = np.asarray(rows, dtype=float)
        return cls(arr[:, :2], arr[:, 3:], arr[:, 2], tuple(header[3:]))


def _grid(start: float, step: float, size: int) -> tuple[np.ndarray, tuple[int, int]]:
    axis = start + step * np.arange(size)
    c1, c2 = np.meshgrid(axis, axis)  # c2 varies by row, c1 by column
    return np.column_stack([c1.ravel(), c2.ravel()]), (size, size)


def gen_toy1(seed: int) -> SpatialDataset:
    """20x20 grid, ``y = sin(x) + (c1 - c2)^2`` then standardized."""
    rng = np.random.default_rng(seed)
    coords, shape = _grid(2.5, 5.0, 20)
    x = rng.standard_normal(len(coords))
    y = np.sin(x) + (coords[:, 0] - coords[:, 1]) ** 2
    return SpatialDataset(coords, x[:, None], zscore(y), ("x",), shape)


def gen_toy2(seed: int, floor_before_scale: bool = False) -> SpatialDataset:
    """29x29 grid, ``y = sin(c1 + c2) * 2pi + floor(z) * 0.1 * c1`` then standardized.

    With the default reading ``z ~ U(1.75, 99.75) * 0.01`` lies in (0, 1), so
    ``floor(z)`` is zero and the linear term vanishes. ``floor_before_scale``
    floors the raw uniform draw first and applies the 0.01 factor afterwards,
    which keeps a visible linear trend in ``c1``.
    """
    rng = np.random.default_rng(seed)
    coords, shape = _grid(1.75, 3.5, 29)
    n = len(coords)
    x = rng.standard_normal(n)
    u = rng.uniform(1.75, 99.75, size=n)
    trend = np.floor(u) * 0.01 if floor_before_scale else np.floor(u * 0.01)
    y = np.sin(coords[:, 0] + coords[:, 1]) * 2 * np.pi + trend * 0.1 * coords[:, 0]
    return SpatialDataset(coords, x[:, None], zscore(y), ("x",), shape)


def load_california(path) -> SpatialDataset:
    """Load the Kaggle ``housing.csv`` file; rows with any missing value are dropped.

    Extra columns (e.g. ``ocean_proximity``) are ignored.
    """
    path = Path(path)
    needed = CALIFORNIA_COORDS + CALIFORNIA_FEATURES + (CALIFORNIA_TARGET,)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in needed if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            raw = [(rec[c] or "").strip() for c in needed]
            if any(v == "" or v.lower() in ("na", "nan") for v in raw):
                continue
            try:
                rows.append([float(v) for v in raw])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}", row=lineno) from None
    arr = np.asarray(rows, dtype=float).reshape(-1, len(needed))
    return SpatialDataset(
        coords=arr[:, :2],
        features=arr[:, 2:8],
        target=arr[:, 8],
        feature_names=CALIFORNIA_FEATURES,
    )
