"""Command-line driver: ``spacegan {gen-data,train,experiment1,experiment2}``.

Every command is deterministic given its configuration and seed. Outputs
carry no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from spacegan.config import DATASETS, PROFILES, load_config_file, resolve
from spacegan.errors import SpaceGanError
from spacegan.experiments import (
    SCHEMA_VERSION,
    Workspace,
    build_graph,
    experiment1,
    experiment2,
    load_dataset,
    write_checkpoints,
    write_json,
)
from spacegan.gan import TrainingAborted, train

logger = logging.getLogger("spacegan")


def _dataset_name(value: str) -> str:
    if value in DATASETS or value.startswith("csv:"):
        return value
    raise argparse.ArgumentTypeError(f"unknown dataset {value!r}; choose from {', '.join(DATASETS)} or csv:<path>")


def _add_run_flags(p: argparse.ArgumentParser, dataset_flag: bool = True) -> None:
    if dataset_flag:
        p.add_argument("--dataset", type=_dataset_name)
    p.add_argument("--config", help="JSON file with any RunConfig fields; flags override it")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--seed", type=int)
    p.add_argument("--metric", choices=["mie", "rmse"])
    p.add_argument("--tsteps", type=int)
    p.add_argument("--snap", type=int)
    p.add_argument("--samples-c", dest="samples_c", type=int)
    p.add_argument("--ensemble-b", dest="ensemble_b", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--neighbourhood", help="'queen' or 'knn:<k>'")
    p.add_argument("--data-path", dest="data_path", help="California Housing CSV")
    p.add_argument("--out", help="output directory (default: $SPACEGAN_OUT/<command>-<dataset>-seed<seed>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacegan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a dataset as CSV (c1, c2, y, x1..xm)")
    p.add_argument("name", type=_dataset_name)
    p.add_argument("-o", "--output", help="CSV path (default: <out>/data.csv)")
    p.add_argument("--toy2-floor-before-scale", dest="toy2_floor_before_scale", action="store_true", default=None)
    _add_run_flags(p, dataset_flag=False)

    p = sub.add_parser("train", help="train on the full dataset and store every snapshot")
    _add_run_flags(p)

    for name, help_text in (
        ("experiment1", "Moran's I error of SpaceGAN vs a GP smooth across spatial folds"),
        ("experiment2", "RMSE of SpaceGAN, GP and spatial-bootstrap ensembles across spatial folds"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_run_flags(p)
        if name == "experiment1":
            p.add_argument("--oracle", dest="include_oracle", action="store_true", default=None,
                           help="add an 'echo' method that returns the real target")
    return parser


def config_from_args(args):
    flags = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "verbose", "output", "name") and v is not None
    }
    if getattr(args, "name", None):
        flags["dataset"] = args.name
    file_values = load_config_file(args.config) if args.config else {}
    return resolve(file_values, flags)


def _summary(data) -> str:
    lines = [f"n={data.n} m={data.m}"]
    cols = {"c1": data.coords[:, 0], "c2": data.coords[:, 1], "y": data.target}
    cols.update({name: data.features[:, j] for j, name in enumerate(data.feature_names)})
    for name, v in cols.items():
        lines.append(f"{name:>20s} mean={v.mean():.3f} std={v.std():.3f} min={v.min():.3f} max={v.max():.3f}")
    return "\n".join(lines)


def cmd_gen_data(args) -> int:
    cfg = config_from_args(args)
    data = load_dataset(cfg)
    path = Path(args.output) if args.output else Path(cfg.output_dir("gen-data")) / "data.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    data.to_csv(path)
    print(_summary(data))
    print(f"wrote {path}")
    return 0


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.output_dir("train"))
    out.mkdir(parents=True, exist_ok=True)
    data = load_dataset(cfg)
    graph = build_graph(cfg, data)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": "train",
        "config": cfg.to_dict(include_out=False),
        "config_hash": cfg.digest(),
        "complete": False,
    }
    try:
        model = train(data, graph, cfg.train_config())
    except TrainingAborted as exc:
        manifest["error"] = str(exc)
        manifest["snapshots"] = [{"step": s.step, "mie": s.mie, "rmse": s.rmse} for s in exc.snapshots]
        write_json(out / "manifest.json", manifest)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest.update(
        {
            "complete": True,
            "selection_metric": model.selection_metric,
            "selected_index": model.selected_index,
            "selected_step": model.selected.step,
            "snapshots": write_checkpoints(model, out),
            "feature_scaler": model.feature_scaler.to_dict(),
            "target_scaler": model.target_scaler.to_dict(),
        }
    )
    write_json(out / "manifest.json", manifest)
    print(f"selected step {model.selected.step} by {model.selection_metric}: "
          f"mie={model.selected.mie:.4f} rmse={model.selected.rmse:.4f}")
    print(f"wrote {out / 'manifest.json'}")
    return 0


def _run_experiment(args, runner) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.output_dir(args.command))
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": cfg.to_dict(include_out=False),
        "config_hash": cfg.digest(),
        "complete": False,
    }
    write_json(out / "manifest.json", manifest)
    ws = Workspace.create(cfg)
    ws.plan.to_csv(out / "folds.csv")
    try:
        report = runner(ws, out)
    except (SpaceGanError, np.linalg.LinAlgError) as exc:
        manifest["error"] = str(exc)
        manifest["completed_folds"] = sorted(ws.runs)
        write_json(out / "manifest.json", manifest)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest["complete"] = True
    manifest["folds"] = [
        {
            "fold": k,
            "axis": f.axis,
            "bin": f.bin_index,
            "n_test": int(f.test.size),
            "n_buffer": int(f.buffer.size),
            "n_train": int(f.train.size),
            "selected_step_mie": ws.runs[k].model.reselect("mie").selected.step,
            "selected_step_rmse": ws.runs[k].model.reselect("rmse").selected.step,
            "snapshots": [{"step": s.step, "mie": s.mie, "rmse": s.rmse} for s in ws.runs[k].model.snapshots],
        }
        for k, f in enumerate(ws.plan)
    ]
    write_json(out / "metrics.json", report)
    write_json(out / "manifest.json", manifest)
    for name, m in report["methods"].items():
        print(f"{name:>14s} {report['metric']}={m['mean']:.4f} (se {m['stderr']:.4f})")
    print(f"wrote {out / 'metrics.json'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "gen-data":
            return cmd_gen_data(args)
        if args.command == "train":
            return cmd_train(args)
        return _run_experiment(args, experiment1 if args.command == "experiment1" else experiment2)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
