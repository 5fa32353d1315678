import json

import pytest

from spacegan.cli import main

FAST = ["--tsteps", "40", "--snap", "20", "--samples-c", "2", "--ensemble-b", "2"]


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestGenData:
    def test_toy1_rows(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert main(["gen-data", "toy1", "--seed", "7", "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("c1,c2,y") and len(lines) == 401
        assert "n=400" in capsys.readouterr().out

    @pytest.mark.parametrize("name, rows", [("toy1", 400), ("toy2", 841)])
    def test_rerun_byte_identical(self, tmp_path, name, rows):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["gen-data", name, "--seed", "3", "-o", str(a)])
        main(["gen-data", name, "--seed", "3", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == rows + 1

    def test_unknown_dataset(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gen-data", "toy9"])
        assert exc.value.code != 0

    def test_missing_california(self, monkeypatch, tmp_path):
        monkeypatch.delenv("SPACEGAN_CALIFORNIA_CSV", raising=False)
        assert main(["gen-data", "california15", "-o", str(tmp_path / "c.csv")]) == 2

    def test_default_output_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv("SPACEGAN_OUT", str(tmp_path))
        assert main(["gen-data", "toy1"]) == 0
        assert (tmp_path / "gen-data-toy1-seed0" / "data.csv").exists()


class TestTrain:
    def test_manifest(self, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--dataset", "toy1", "--out", str(out), *FAST]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["complete"] and manifest["selection_metric"] == "mie"
        snaps = manifest["snapshots"]
        assert [s["step"] for s in snaps] == [20, 40]
        assert sum(s["selected"] for s in snaps) == 1
        assert all((out / s["generator"]).exists() and (out / s["discriminator"]).exists() for s in snaps)

    def test_rmse_metric(self, tmp_path):
        out = tmp_path / "run"
        assert main(["train", "--out", str(out), "--metric", "rmse", *FAST]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        rm = [s["rmse"] for s in manifest["snapshots"]]
        assert manifest["selected_index"] == rm.index(min(rm))

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"tsteps": 20, "snap": 10, "samples_c": 1, "seed": 4}))
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--snap", "20", "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 4 and manifest["config"]["snap"] == 20
        assert len(manifest["snapshots"]) == 1

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 3}))
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 2

    def test_rerun_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["train", "--out", str(tmp_path / d), *FAST]) == 0
        assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")


@pytest.fixture(scope="module")
def experiment_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    codes = {}
    for cmd in ("experiment1", "experiment2"):
        for rep in ("a", "b"):
            extra = ["--oracle"] if cmd == "experiment1" else []
            codes[cmd, rep] = main([cmd, "--dataset", "toy1", "--out", str(root / cmd / rep), *FAST, *extra])
    return root, codes


class TestExperiments:
    def test_exit_codes(self, experiment_dirs):
        _, codes = experiment_dirs
        assert set(codes.values()) == {0}

    def test_experiment1_report(self, experiment_dirs):
        root, _ = experiment_dirs
        report = json.loads((root / "experiment1" / "a" / "metrics.json").read_text())
        assert set(report["methods"]) == {"spacegan", "gp", "echo"}
        assert all(len(m["folds"]) == 10 for m in report["methods"].values())
        assert report["methods"]["echo"]["mean"] == 0.0
        lisa = (root / "experiment1" / "a" / "lisa_0.csv").read_text().splitlines()
        assert lisa[0] == "index,c1,c2,y,I,y_spacegan,I_spacegan,y_gp,I_gp" and len(lisa) == 81

    def test_experiment2_report(self, experiment_dirs):
        root, _ = experiment_dirs
        report = json.loads((root / "experiment2" / "a" / "metrics.json").read_text())
        assert set(report["methods"]) == {"spacegan_mie", "spacegan_rmse", "gp", "spatial_boot"}
        for m in report["methods"].values():
            assert len(m["folds"]) == 10 and m["stderr"] >= 0
        manifest = json.loads((root / "experiment2" / "a" / "manifest.json").read_text())
        assert manifest["complete"] and len(manifest["folds"]) == 10

    @pytest.mark.parametrize("cmd", ["experiment1", "experiment2"])
    def test_rerun_byte_identical(self, experiment_dirs, cmd):
        root, _ = experiment_dirs
        a, b = read_tree(root / cmd / "a"), read_tree(root / cmd / "b")
        assert a.keys() == b.keys() and a == b
