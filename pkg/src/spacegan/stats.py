"""Local Moran's I, the Moran's I error used for generator selection, RMSE, z-scoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from spacegan.errors import DegenerateInputError, ShapeError


def local_morans_i(y, w) -> np.ndarray:
    r"""Local Moran's I for every location.

    .. math::
        I_i = (n-1)\,\frac{y_i-\bar y}{\sum_{j\ne i}(y_j-\bar y)^2}\sum_{j\ne i} w_{ij}(y_j-\bar y)

    Note the denominator excludes ``i`` itself, so it differs per location.

    Parameters
    ----------
    y : array-like, shape (n,)
    w : array-like, shape (n, n)
        Binary weight matrix with zero diagonal.

    Returns
    -------
    ndarray, shape (n,)
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = y.shape[0]
    if y.ndim != 1 or w.shape != (n, n):
        raise ShapeError(f"y has shape {y.shape} but w has shape {w.shape}")
    if n < 2:
        raise ShapeError("local Moran's I needs at least two observations")
    dev = y - y.mean()
    sq = dev**2
    denom = sq.sum() - sq
    if np.any(denom <= 0.0):
        raise DegenerateInputError("zero spread in y: local Moran's I is undefined")
    # diagonal of w is zero by contract, but exclude j == i explicitly anyway
    lag = w @ dev - np.diag(w) * dev
    return (n - 1) * dev / denom * lag


def mie(y_real, y_fake, w) -> float:
    """Sum over locations of ``|I(y_i) - I(y_hat_i)|``.

    Despite the name this is a sum, not a mean; averaging happens over
    generator draws, see :func:`spacegan.gan.evaluate_snapshot`.
    """
    y_real = np.asarray(y_real, dtype=float)
    y_fake = np.asarray(y_fake, dtype=float)
    if y_real.shape != y_fake.shape:
        raise ShapeError(f"length mismatch: {y_real.shape} vs {y_fake.shape}")
    return float(np.abs(local_morans_i(y_real, w) - local_morans_i(y_fake, w)).sum())


def rmse(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size == 0:
        raise ShapeError(f"rmse needs equal nonzero lengths, got {y.shape} and {yhat.shape}")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def zscore(v) -> np.ndarray:
    """Standardize a single vector by its own mean and population std."""
    v = np.asarray(v, dtype=float)
    s = v.std()
    if s == 0.0:
        raise DegenerateInputError("cannot standardize a constant vector")
    return (v - v.mean()) / s


@dataclass(frozen=True)
class Scaler:
    """Column-wise z-score with population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, data) -> "Scaler":
        data = _as_matrix(data)
        if data.shape[0] < 2:
            raise ShapeError("scaler needs at least two rows")
        return cls(mean=data.mean(axis=0), std=data.std(axis=0))

    def transform(self, data) -> np.ndarray:
        data, squeeze = _as_matrix(data), np.ndim(data) == 1
        if data.shape[1] != self.mean.shape[0]:
            raise ShapeError(f"expected {self.mean.shape[0]} columns, got {data.shape[1]}")
        bad = np.flatnonzero(self.std == 0.0)
        if bad.size:
            raise DegenerateInputError(f"zero-std column(s) {bad.tolist()}")
        out = (data - self.mean) / self.std
        return out[:, 0] if squeeze else out

    def inverse(self, data) -> np.ndarray:
        data, squeeze = _as_matrix(data), np.ndim(data) == 1
        if data.shape[1] != self.mean.shape[0]:
            raise ShapeError(f"expected {self.mean.shape[0]} columns, got {data.shape[1]}")
        out = data * self.std + self.mean
        return out[:, 0] if squeeze else out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Scaler":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def scaler_fit(data) -> Scaler:
    return Scaler.fit(data)


def scaler_transform(data, scaler: Scaler) -> np.ndarray:
    return scaler.transform(data)


def scaler_inverse(data, scaler: Scaler) -> np.ndarray:
    return scaler.inverse(data)


def _as_matrix(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {data.shape}")
    return data


def write_lisa_csv(path, coords, y, w, extra=None) -> None:
    """Write ``index, c1, c2, y, I`` rows; ``extra`` maps column name to vector."""
    coords = np.asarray(coords, dtype=float)
    y = np.asarray(y, dtype=float)
    lisa = local_morans_i(y, w)
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "c1", "c2", "y", "I", *extra])
        for i in range(len(y)):
            writer.writerow(
                [i, repr(float(coords[i, 0])), repr(float(coords[i, 1])), repr(float(y[i])), repr(float(lisa[i]))]
                + [repr(float(v[i])) for v in extra.values()]
            )
