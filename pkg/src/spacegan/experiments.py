"""End-to-end pipelines: data loading, per-fold training, the two benchmark experiments, reports."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from spacegan.config import CALIFORNIA_ENV, RunConfig
from spacegan.cv import FoldPlan, buffer_violations, spatial_folds
from spacegan.datasets import SpatialDataset, gen_toy1, gen_toy2, load_california
from spacegan.ensemble import design_matrix, ganning, gp_bagging, spatial_bootstrap
from spacegan.gan import TrainedSpaceGan, sample, train
from spacegan.gp import fit_spatial_gp
from spacegan.nn import save_network
from spacegan.stats import local_morans_i, mie, rmse, zscore
from spacegan.weights import NeighborhoodGraph, knn_graph, queen_graph, restrict_graph, to_weight_matrix

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXP2_METHODS = ("spacegan_mie", "spacegan_rmse", "gp", "spatial_boot")


def load_dataset(cfg: RunConfig) -> SpatialDataset:
    family = cfg.dataset_family
    if family == "toy1":
        data = gen_toy1(cfg.seed)
    elif family == "toy2":
        data = gen_toy2(cfg.seed, floor_before_scale=cfg.toy2_floor_before_scale)
    elif family.startswith("california"):
        path = cfg.data_path or os.environ.get(CALIFORNIA_ENV)
        if not path:
            raise FileNotFoundError(f"California Housing needs --data-path or ${CALIFORNIA_ENV}")
        data = load_california(path)
    else:
        data = SpatialDataset.from_csv(cfg.dataset.split(":", 1)[1])
    if cfg.subsample is not None and data.n > cfg.subsample:
        idx = np.sort(np.random.default_rng([cfg.seed, 99]).choice(data.n, cfg.subsample, replace=False))
        data = data.subset(idx)
    return data


def build_graph(cfg: RunConfig, data: SpatialDataset) -> NeighborhoodGraph:
    kind, _, arg = cfg.neighbourhood.partition(":")
    if kind == "queen":
        if data.grid_shape is None:
            raise ValueError("queen neighbourhood needs a gridded dataset")
        return queen_graph(*data.grid_shape)
    return knn_graph(data.coords, int(arg))


def standard_error(values) -> float:
    """Sample standard deviation over folds divided by sqrt(folds)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(v.std(ddof=1) / np.sqrt(v.size))


def summarize(values) -> dict:
    values = [float(v) for v in values]
    return {"folds": values, "mean": float(np.mean(values)), "stderr": standard_error(values)}


@dataclass
class FoldRun:
    index: int
    train_data: SpatialDataset
    train_graph: NeighborhoodGraph
    model: TrainedSpaceGan
    seed: int


@dataclass
class Workspace:
    """Dataset, graph, folds and (lazily) one trained model per fold, shared by both experiments."""

    cfg: RunConfig
    data: SpatialDataset
    graph: NeighborhoodGraph
    plan: FoldPlan
    runs: dict

    @classmethod
    def create(cls, cfg: RunConfig) -> "Workspace":
        data = load_dataset(cfg)
        graph = build_graph(cfg, data)
        return cls(cfg, data, graph, spatial_folds(data.coords, graph, cfg.bins), {})

    def fold_seed(self, k: int) -> int:
        return self.cfg.seed * 1000 + k

    def fold_run(self, k: int) -> FoldRun:
        if k not in self.runs:
            fold = self.plan[k]
            train_data = self.data.subset(fold.train)
            train_graph = restrict_graph(self.graph, self.data.coords, fold.train)
            seed = self.fold_seed(k)
            logger.info("fold %d: training on %d points", k, train_data.n)
            model = train(train_data, train_graph, self.cfg.train_config(seed=seed))
            self.runs[k] = FoldRun(k, train_data, train_graph, model, seed)
        return self.runs[k]


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v) -> str:
    return repr(float(v))


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def experiment1(ws: Workspace, out_dir=None) -> dict:
    """Test-split Moran's I error of SpaceGAN draws and of a GP smooth, per fold.

    Both methods see only the training split; SpaceGAN is conditioned on the
    real neighbourhoods of the held-out points.
    """
    cfg, data = ws.cfg, ws.data
    out = Path(out_dir) if out_dir else None
    per_method = {"spacegan": [], "gp": []}
    if cfg.include_oracle:
        per_method["echo"] = []
    for k, fold in enumerate(ws.plan):
        run = ws.fold_run(k)
        test = fold.test
        w_test = to_weight_matrix(restrict_graph(ws.graph, data.coords, test))
        y_test = zscore(data.target[test])

        draws = sample(run.model, data, ws.graph, cfg.samples_c, run.seed)
        scores = [mie(y_test, zscore(y_hat[test]), w_test) for _, y_hat in draws]
        per_method["spacegan"].append(float(np.mean(scores)))

        train = fold.train
        gp = fit_spatial_gp(data.coords[train], data.target[train], cfg.gp_lengthscale, cfg.gp_max_points, run.seed)
        gp_mean, _ = gp.predict(data.coords[test])
        per_method["gp"].append(mie(y_test, zscore(gp_mean), w_test))
        if cfg.include_oracle:
            per_method["echo"].append(mie(y_test, zscore(data.target[test]), w_test))

        if out is not None:
            gan_mean = np.mean([y_hat[test] for _, y_hat in draws], axis=0)
            cols = {
                "index": test,
                "c1": data.coords[test, 0],
                "c2": data.coords[test, 1],
                "y": data.target[test],
                "I": local_morans_i(y_test, w_test),
                "y_spacegan": gan_mean,
                "I_spacegan": local_morans_i(gan_mean, w_test),
                "y_gp": gp_mean,
                "I_gp": local_morans_i(gp_mean, w_test),
            }
            _write_rows(
                out / f"lisa_{k}.csv",
                list(cols),
                ([int(test[r])] + [_fmt(cols[c][r]) for c in list(cols)[1:]] for r in range(len(test))),
            )
            header = ["draw", "index", "c1", "c2", "y_hat"] + [f"x_hat{j + 1}" for j in range(data.m)]
            rows = (
                [b, int(i), _fmt(data.coords[i, 0]), _fmt(data.coords[i, 1]), _fmt(y_hat[i])] + [_fmt(v) for v in x_hat[i]]
                for b, (x_hat, y_hat) in enumerate(draws)
                for i in test
            )
            _write_rows(out / f"samples_{k}.csv", header, rows)

    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": "experiment1",
        "metric": "mie",
        "n_folds": ws.plan.n_folds,
        "methods": {name: summarize(v) for name, v in per_method.items()},
    }


def experiment2(ws: Workspace, out_dir=None) -> dict:
    """Out-of-fold RMSE of four tree ensembles trained on shared folds."""
    cfg, data = ws.cfg, ws.data
    out = Path(out_dir) if out_dir else None
    params = cfg.tree_params()
    per_method = {name: [] for name in EXP2_METHODS}
    for k, fold in enumerate(ws.plan):
        if np.intersect1d(fold.train, fold.test).size or buffer_violations(fold, ws.graph):
            raise AssertionError(f"fold {k}: train/test leakage")
        run = ws.fold_run(k)
        X_test = design_matrix(data.subset(fold.test))
        y_test = data.target[fold.test]
        gp = fit_spatial_gp(run.train_data.coords, run.train_data.target, cfg.gp_lengthscale, cfg.gp_max_points, run.seed)
        ensembles = {
            "spacegan_mie": ganning(run.model.reselect("mie"), run.train_data, run.train_graph, cfg.ensemble_b, run.seed, params),
            "spacegan_rmse": ganning(run.model.reselect("rmse"), run.train_data, run.train_graph, cfg.ensemble_b, run.seed, params),
            "gp": gp_bagging(gp, run.train_data, cfg.ensemble_b, run.seed, params),
            "spatial_boot": spatial_bootstrap(run.train_data, run.train_graph, cfg.ensemble_b, run.seed, params),
        }
        preds = {name: ens.predict(X_test) for name, ens in ensembles.items()}
        for name in EXP2_METHODS:
            per_method[name].append(rmse(y_test, preds[name]))
        if out is not None:
            _write_rows(
                out / f"predictions_{k}.csv",
                ["index", "y", *EXP2_METHODS],
                ([int(i), _fmt(y_test[r])] + [_fmt(preds[m][r]) for m in EXP2_METHODS] for r, i in enumerate(fold.test)),
            )
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": "experiment2",
        "metric": "rmse",
        "n_folds": ws.plan.n_folds,
        "ensemble_b": cfg.ensemble_b,
        "methods": {name: summarize(v) for name, v in per_method.items()},
    }


def write_checkpoints(model: TrainedSpaceGan, out_dir) -> list[dict]:
    ckpt = Path(out_dir) / "checkpoints"
    ckpt.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, snap in enumerate(model.snapshots):
        g_path = ckpt / f"G_{snap.step:06d}.csv"
        d_path = ckpt / f"D_{snap.step:06d}.csv"
        save_network(snap.generator, g_path)
        save_network(snap.discriminator, d_path)
        entries.append(
            {
                "index": k,
                "step": snap.step,
                "mie": snap.mie,
                "rmse": snap.rmse,
                "generator": str(g_path.relative_to(out_dir)),
                "discriminator": str(d_path.relative_to(out_dir)),
                "selected": k == model.selected_index,
            }
        )
    return entries
