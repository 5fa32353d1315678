"""Exact Gaussian-process regression with a unit-variance RBF kernel."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from spacegan.errors import IllConditionedError, ShapeError

DEFAULT_JITTER = 1e-6
MAX_JITTER = 1e-2


def rbf_kernel(a, b, lengthscale: float = 1.0) -> np.ndarray:
    """``exp(-|a - b|^2 / (2 l^2))``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sq = (a**2).sum(1)[:, None] + (b**2).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-0.5 * sq / lengthscale**2)


def _cholesky_with_jitter(k: np.ndarray, jitter: float):
    """Lower Cholesky factor of ``k + jitter * I``, raising jitter x10 up to ``MAX_JITTER``."""
    eye = np.eye(len(k))
    while True:
        try:
            return cholesky(k + jitter * eye, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, DEFAULT_JITTER)
            if jitter > MAX_JITTER * (1 + 1e-9):
                raise IllConditionedError("Cholesky failed even with jitter 1e-2") from None


@dataclass(frozen=True)
class GpModel:
    X: np.ndarray
    y: np.ndarray
    lengthscale: float
    noise: float
    chol: np.ndarray
    alpha: np.ndarray

    def predict(self, Xs):
        return gp_predict(self, Xs)


def gp_fit(X, y, lengthscale: float = 1.0, noise: float = DEFAULT_JITTER) -> GpModel:
    """Factorize ``K + noise * I`` for the training inputs.

    ``X`` is expected to be standardized; the kernel has unit signal variance.
    """
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise ShapeError(f"need n >= 2 matching rows, got X {X.shape} and y {y.shape}")
    if lengthscale <= 0:
        raise ValueError("lengthscale must be positive")
    K = rbf_kernel(X, X, lengthscale)
    L, used = _cholesky_with_jitter(K, noise)
    alpha = cho_solve((L, True), y)
    return GpModel(X=X, y=y, lengthscale=float(lengthscale), noise=used, chol=L, alpha=alpha)


def gp_predict(model: GpModel, Xs):
    """Posterior mean ``(q,)`` and covariance ``(q, q)`` of the latent function."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs[None, :] if Xs.size else Xs.reshape(0, model.X.shape[1])
    if Xs.shape[1] != model.X.shape[1]:
        raise ShapeError(f"expected {model.X.shape[1]} input columns, got {Xs.shape[1]}")
    if Xs.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    Ks = rbf_kernel(model.X, Xs, model.lengthscale)
    mean = Ks.T @ model.alpha
    v = solve_triangular(model.chol, Ks, lower=True)
    cov = rbf_kernel(Xs, Xs, model.lengthscale) - v.T @ v
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _psd_factor(cov: np.ndarray, jitter: float = 1e-10) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T ~= cov``; eigen-fallback for rank-deficient matrices."""
    if not np.any(cov):
        return np.zeros_like(cov)
    eye = np.eye(len(cov))
    j = jitter
    while j <= MAX_JITTER:
        try:
            return cholesky(cov + j * eye, lower=True)
        except np.linalg.LinAlgError:
            j *= 10.0
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -1e-6 * max(1.0, vals.max()):
        raise IllConditionedError("posterior covariance is not positive semi-definite")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def gp_sample_posterior(model: GpModel, Xs, B: int, seed) -> np.ndarray:
    """``B`` joint posterior draws at ``Xs``, shape ``(B, q)``."""
    mean, cov = gp_predict(model, Xs)
    if B <= 0:
        return np.zeros((0, mean.shape[0]))
    L = _psd_factor(cov)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((B, mean.shape[0]))
    return mean[None, :] + eps @ L.T


def write_posterior_csv(path, coords, mean, cov) -> None:
    """Posterior mean and marginal std per location."""
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "c1", "c2", "mean", "std"])
        for i in range(len(mean)):
            writer.writerow([i, repr(float(coords[i, 0])), repr(float(coords[i, 1])), repr(float(mean[i])), repr(float(std[i]))])


@dataclass(frozen=True)
class SpatialGp:
    """GP smooth over standardized coordinates of a dataset, in raw target units."""

    model: GpModel
    coord_mean: np.ndarray
    coord_std: np.ndarray
    target_mean: float
    target_std: float

    def _inputs(self, coords):
        return (np.asarray(coords, dtype=float) - self.coord_mean) / self.coord_std

    def predict(self, coords):
        """Posterior mean and covariance at ``coords`` in raw target units."""
        mean, cov = gp_predict(self.model, self._inputs(coords))
        return mean * self.target_std + self.target_mean, cov * self.target_std**2

    def sample(self, coords, B: int, seed) -> np.ndarray:
        draws = gp_sample_posterior(self.model, self._inputs(coords), B, seed)
        return draws * self.target_std + self.target_mean


def fit_spatial_gp(coords, target, lengthscale: float = 1.0, max_points: int | None = None, seed=0) -> SpatialGp:
    """Fit on coordinates only; subsample to ``max_points`` rows (without replacement) when larger."""
    coords = np.asarray(coords, dtype=float)
    target = np.asarray(target, dtype=float)
    cm, cs = coords.mean(axis=0), coords.std(axis=0)
    cs = np.where(cs > 0, cs, 1.0)
    tm, ts = float(target.mean()), float(target.std())
    ts = ts if ts > 0 else 1.0
    idx = np.arange(len(target))
    if max_points is not None and len(idx) > max_points:
        idx = np.sort(np.random.default_rng(seed).choice(len(idx), size=max_points, replace=False))
    model = gp_fit((coords[idx] - cm) / cs, (target[idx] - tm) / ts, lengthscale)
    return SpatialGp(model, cm, cs, tm, ts)
