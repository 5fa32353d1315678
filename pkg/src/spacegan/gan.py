"""Neighbourhood-conditioned GAN: conditioning tensors, adversarial training, snapshot selection.

Wiring
------
Every point ``i`` is conditioned on a ``(slots, m + 1)`` tensor holding the
standardized ``(x_j, y_j)`` of its neighbours in canonical graph order,
zero-padded to the graph capacity. The generator concatenates the noise
vector onto every slot as extra channels, applies one ``conv1d`` whose
kernel spans all slots (relu) and a linear dense head emitting
``(x_hat_1..x_hat_m, y_hat)``. The discriminator concatenates the candidate
``(x, y)`` onto every slot, applies ``conv1d`` (tanh) and a sigmoid head.

Random streams are derived from ``(seed, purpose, ...)`` tuples so that
evaluation and sampling draws do not depend on execution order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from spacegan.datasets import SpatialDataset
from spacegan.errors import DegenerateInputError, NumericFault, ShapeError
from spacegan.nn import Activation, Conv1d, Dense, Network, SgdConfig, sgd_step
from spacegan.stats import Scaler, local_morans_i, rmse
from spacegan.weights import NeighborhoodGraph, to_weight_matrix

logger = logging.getLogger(__name__)

LOG_EPS = 1e-8

# stream tags for np.random.default_rng([seed, tag, ...])
_INIT, _TRAIN, _EVAL, _SAMPLE = 0, 1, 2, 3


@dataclass(frozen=True)
class TrainConfig:
    tsteps: int = 20000
    batch_size: int = 100
    snap: int = 500
    samples_c: int = 500
    noise_dim: int = 8
    learning_rate: float = 0.01
    gen_filters: int = 50
    disc_filters: int = 50
    selection_metric: str = "mie"
    seed: int = 0

    def __post_init__(self):
        if self.snap < 1 or self.snap > self.tsteps:
            raise ValueError(f"need 1 <= snap <= tsteps, got snap={self.snap}, tsteps={self.tsteps}")
        if self.samples_c < 1 or self.batch_size < 1 or self.noise_dim < 1:
            raise ValueError("samples_c, batch_size and noise_dim must be >= 1")
        if self.selection_metric not in ("mie", "rmse"):
            raise ValueError(f"selection_metric must be 'mie' or 'rmse', got {self.selection_metric!r}")

    @property
    def sgd(self) -> SgdConfig:
        return SgdConfig(self.learning_rate, self.batch_size)


@dataclass
class Snapshot:
    step: int
    generator: Network
    discriminator: Network
    mie: float | None = None
    rmse: float | None = None

    def metric(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"snapshot at step {self.step} has no {name} recorded")
        return value


@dataclass
class TrainedSpaceGan:
    snapshots: list[Snapshot]
    selected_index: int
    selection_metric: str
    feature_scaler: Scaler
    target_scaler: Scaler
    graph: NeighborhoodGraph
    config: TrainConfig
    complete: bool = True
    history: list[dict] = field(default_factory=list)

    @property
    def selected(self) -> Snapshot:
        return self.snapshots[self.selected_index]

    @property
    def generator(self) -> Network:
        return self.selected.generator

    @property
    def discriminator(self) -> Network:
        return self.selected.discriminator

    @property
    def slots(self) -> int:
        return self.graph.capacity

    def reselect(self, metric: str) -> "TrainedSpaceGan":
        """Same training run, snapshot chosen by another metric."""
        return replace(self, selected_index=select_snapshot(self.snapshots, metric), selection_metric=metric)


class TrainingAborted(NumericFault):
    def __init__(self, message, snapshots):
        super().__init__(message)
        self.snapshots = snapshots


def make_generator(m: int, slots: int, noise_dim: int, filters: int, rng=None) -> Network:
    rng = np.random.default_rng(rng)
    return Network(
        [
            Conv1d(m + 1 + noise_dim, filters, slots, rng=rng),
            Activation("relu"),
            Dense(filters, m + 1, rng=rng),
            Activation("linear"),
        ]
    )


def make_discriminator(m: int, slots: int, filters: int, rng=None) -> Network:
    rng = np.random.default_rng(rng)
    return Network(
        [
            Conv1d(2 * (m + 1), filters, slots, rng=rng),
            Activation("tanh"),
            Dense(filters, 1, rng=rng),
            Activation("sigmoid"),
        ]
    )


def _standardized(data: SpatialDataset, feature_scaler: Scaler, target_scaler: Scaler) -> np.ndarray:
    """``(n, m + 1)`` matrix of standardized ``[x, y]``."""
    return np.column_stack([feature_scaler.transform(data.features), target_scaler.transform(data.target)])


def build_contexts(
    data: SpatialDataset,
    graph: NeighborhoodGraph,
    feature_scaler: Scaler,
    target_scaler: Scaler,
    slots: int | None = None,
) -> np.ndarray:
    """Conditioning tensors for every point, shape ``(n, slots, m + 1)``."""
    if graph.n != data.n:
        raise ShapeError(f"graph covers {graph.n} points, dataset has {data.n}")
    slots = graph.capacity if slots is None else slots
    table = _standardized(data, feature_scaler, target_scaler)
    out = np.zeros((data.n, slots, data.m + 1))
    for i, nb in enumerate(graph.neighbors):
        if len(nb) > slots:
            raise ShapeError(f"point {i} has {len(nb)} neighbours but only {slots} slots")
        if nb:
            out[i, : len(nb)] = table[list(nb)]
    return out


def build_context(i, data, graph, feature_scaler, target_scaler, slots=None) -> np.ndarray:
    """Conditioning tensor of one point, shape ``(slots, m + 1)``."""
    if not 0 <= i < data.n:
        raise IndexError(f"point index {i} out of range for n={data.n}")
    slots = graph.capacity if slots is None else slots
    table = _standardized(data, feature_scaler, target_scaler)
    out = np.zeros((slots, data.m + 1))
    nb = list(graph.neighbors[i])
    if nb:
        out[: len(nb)] = table[nb]
    return out


def generator_input(contexts, z) -> np.ndarray:
    z = np.broadcast_to(z[:, None, :], (contexts.shape[0], contexts.shape[1], z.shape[1]))
    return np.concatenate([contexts, z], axis=2)


def discriminator_input(contexts, candidates) -> np.ndarray:
    cand = np.broadcast_to(candidates[:, None, :], contexts.shape[:2] + (candidates.shape[1],))
    return np.concatenate([contexts, cand], axis=2)


def select_snapshot(snapshots, metric: str = "mie") -> int:
    """Index of the snapshot with the smallest metric (earliest on ties)."""
    if not snapshots:
        raise ValueError("no snapshots to select from")
    values = [s.metric(metric) if isinstance(s, Snapshot) else float(s) for s in snapshots]
    return int(np.argmin(values))


def generate(generator: Network, contexts, rng, noise_dim: int) -> np.ndarray:
    """One draw for every context row; standardized ``(n, m + 1)`` output."""
    z = rng.standard_normal((contexts.shape[0], noise_dim))
    return generator.forward(generator_input(contexts, z))


def evaluate_generator(generator, contexts, y_real_std, w, samples_c, noise_dim, seed, step=0):
    """Mean over ``samples_c`` draws of the Moran's I error and of the RMSE.

    Both are computed on standardized targets. A draw with a constant
    ``y_hat`` is redrawn once from a fresh stream before giving up.
    """
    lisa_real = local_morans_i(y_real_std, w)
    mie_total, rmse_total = 0.0, 0.0
    for c in range(samples_c):
        yhat = None
        for attempt in range(2):
            rng = np.random.default_rng([seed, _EVAL, step, c, attempt])
            cand = generate(generator, contexts, rng, noise_dim)[:, -1]
            try:
                lisa_fake = local_morans_i(cand, w)
            except DegenerateInputError:
                logger.warning("degenerate draw %d at step %d (attempt %d)", c, step, attempt)
                continue
            yhat = cand
            break
        if yhat is None:
            raise DegenerateInputError(f"draw {c} at step {step} stayed degenerate after resampling")
        mie_total += float(np.abs(lisa_real - lisa_fake).sum())
        rmse_total += rmse(y_real_std, yhat)
    return mie_total / samples_c, rmse_total / samples_c


def evaluate_snapshot(snapshot, data, graph, w, samples_c, seed, feature_scaler, target_scaler, noise_dim):
    """Record and return ``(mie, rmse)`` for a snapshot on ``data``."""
    contexts = build_contexts(data, graph, feature_scaler, target_scaler)
    y_std = target_scaler.transform(data.target)
    snapshot.mie, snapshot.rmse = evaluate_generator(
        snapshot.generator, contexts, y_std, w, samples_c, noise_dim, seed, snapshot.step
    )
    return snapshot.mie, snapshot.rmse


def train(data: SpatialDataset, graph: NeighborhoodGraph, config: TrainConfig) -> TrainedSpaceGan:
    """Adversarial training with periodic snapshots; returns the best snapshot by the configured metric."""
    if graph.n != data.n:
        raise ShapeError(f"graph covers {graph.n} points, dataset has {data.n}")
    feature_scaler = Scaler.fit(data.features)
    target_scaler = Scaler.fit(data.target)
    if target_scaler.std[0] == 0.0:
        raise DegenerateInputError("training target is constant")
    contexts = build_contexts(data, graph, feature_scaler, target_scaler)
    reals = _standardized(data, feature_scaler, target_scaler)
    y_std = reals[:, -1]
    w = to_weight_matrix(graph)
    m, slots, L, nd = data.m, graph.capacity, config.batch_size, config.noise_dim
    sgd = config.sgd

    init_rng = np.random.default_rng([config.seed, _INIT])
    G = make_generator(m, slots, nd, config.gen_filters, init_rng)
    D = make_discriminator(m, slots, config.disc_filters, init_rng)
    rng = np.random.default_rng([config.seed, _TRAIN])

    snapshots: list[Snapshot] = []
    history: list[dict] = []
    try:
        for step in range(1, config.tsteps + 1):
            idx = rng.integers(0, data.n, size=L)
            ctx, real = contexts[idx], reals[idx]

            # discriminator: ascend mean[log D(real) + log(1 - D(fake))]
            fake = G.forward(generator_input(ctx, rng.standard_normal((L, nd))))
            d_out = D.forward(
                np.concatenate([discriminator_input(ctx, real), discriminator_input(ctx, fake)])
            )[:, 0]
            d_real, d_fake = d_out[:L], d_out[L:]
            grad = np.concatenate(
                [
                    np.where(d_real > LOG_EPS, 1.0 / np.maximum(d_real, LOG_EPS), 0.0),
                    np.where(1.0 - d_fake > LOG_EPS, -1.0 / np.maximum(1.0 - d_fake, LOG_EPS), 0.0),
                ]
            ) / L
            d_grads, _ = D.backward(grad[:, None])
            sgd_step(D, d_grads, sgd, "ascend")

            # generator: ascend mean[log D(G(z))]
            fake = G.forward(generator_input(ctx, rng.standard_normal((L, nd))))
            d_fake = D.forward(discriminator_input(ctx, fake))[:, 0]
            grad = np.where(d_fake > LOG_EPS, 1.0 / np.maximum(d_fake, LOG_EPS), 0.0) / L
            _, d_in = D.backward(grad[:, None])
            g_grads, _ = G.backward(d_in[:, :, m + 1 :].sum(axis=1))
            sgd_step(G, g_grads, sgd, "ascend")

            if step % config.snap == 0:
                snap = Snapshot(step, G.clone(), D.clone())
                snap.mie, snap.rmse = evaluate_generator(
                    snap.generator, contexts, y_std, w, config.samples_c, nd, config.seed, step
                )
                snapshots.append(snap)
                history.append(
                    {
                        "step": step,
                        "d_real": float(d_real.mean()),
                        "d_fake": float(d_fake.mean()),
                        "mie": snap.mie,
                        "rmse": snap.rmse,
                    }
                )
                logger.info("step %d: mie=%.4f rmse=%.4f", step, snap.mie, snap.rmse)
    except NumericFault as exc:
        raise TrainingAborted(f"training aborted at step {step}: {exc}", snapshots) from exc

    return TrainedSpaceGan(
        snapshots=snapshots,
        selected_index=select_snapshot(snapshots, config.selection_metric),
        selection_metric=config.selection_metric,
        feature_scaler=feature_scaler,
        target_scaler=target_scaler,
        graph=graph,
        config=config,
        history=history,
    )


def sample(model: TrainedSpaceGan, data: SpatialDataset, graph: NeighborhoodGraph, count: int, seed: int):
    """``count`` generated datasets at the points of ``data``, in raw units.

    Each draw uses its own stream ``(seed, draw)`` with fresh noise per point.

    Returns
    -------
    list of (x_hat, y_hat)
        ``x_hat`` has shape ``(n, m)``, ``y_hat`` shape ``(n,)``.
    """
    if count <= 0:
        return []
    contexts = build_contexts(data, graph, model.feature_scaler, model.target_scaler, slots=model.slots)
    draws = []
    for b in range(count):
        out = generate(model.generator, contexts, np.random.default_rng([seed, _SAMPLE, b]), model.config.noise_dim)
        x_hat = model.feature_scaler.inverse(out[:, :-1])
        y_hat = model.target_scaler.inverse(out[:, -1])
        draws.append((x_hat, y_hat))
    return draws
