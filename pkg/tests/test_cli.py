import json
from pathlib import Path

import pandas as pd
import pytest
import yaml

from semsplat.cli.main import build_parser, main
from semsplat.utils.images import read_index_map

SYNTH = {"num_classes": 2, "num_blobs": 3, "num_views": 4, "labeled_views": 2, "image_size": 16, "sparse_points": 150}
TRAIN = {
    "total_steps": 3, "k": 3, "agg2d_samples": 16, "agg3d_samples": 8, "feature_dim": 4,
    "sh_degree": 1, "decoder_hidden": 8, "tile_size": 8, "log_interval": 1,
}


def _write_yaml(path: Path, data: dict) -> str:
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _files(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def scene(workdir):
    out = workdir / "scene"
    config = _write_yaml(workdir / "synth.yaml", SYNTH)
    assert main(["synth", "--out", str(out), "--config", config, "--seed", "3"]) == 0
    assert main(["pseudo", "--scene", str(out), "--seed", "0"]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(workdir, scene):
    out = workdir / "run"
    config = _write_yaml(workdir / "train.yaml", TRAIN)
    assert main(["train", "--scene", str(scene), "--out", str(out), "--config", config]) == 0
    return out


class TestSynth:

    def test_layout(self, scene):
        assert len(list((scene / "images").glob("*.png"))) == 4
        assert len(list((scene / "oracle").glob("*.png"))) == 4
        assert len(list((scene / "labels").glob("*.png"))) == 2
        assert (scene / "instances" / "manifest.csv").exists()
        assert (scene / "colmap" / "images.txt").exists()
        meta = yaml.safe_load((scene / "scene.yaml").read_text())
        assert meta["num_classes"] == 3
        assert meta["class_names"][0] == "background"

    def test_deterministic(self, tmp_path):
        config = _write_yaml(tmp_path / "synth.yaml", SYNTH)
        assert main(["synth", "--out", str(tmp_path / "a"), "--config", config, "--seed", "5"]) == 0
        assert main(["synth", "--out", str(tmp_path / "b"), "--config", config, "--seed", "5"]) == 0
        assert _files(tmp_path / "a") == _files(tmp_path / "b")

    def test_seed_changes_scene(self, tmp_path):
        config = _write_yaml(tmp_path / "synth.yaml", SYNTH)
        main(["synth", "--out", str(tmp_path / "a"), "--config", config, "--seed", "5"])
        main(["synth", "--out", str(tmp_path / "b"), "--config", config, "--seed", "6"])
        assert _files(tmp_path / "a") != _files(tmp_path / "b")


class TestPseudo:

    def test_every_view_gets_maps(self, scene):
        stems = sorted(p.stem for p in (scene / "images").glob("*.png"))
        for stem in stems:
            labels = read_index_map(scene / "pseudo" / f"{stem}_label.png")
            boundary = read_index_map(scene / "pseudo" / f"{stem}_boundary.png")
            assert labels.shape == boundary.shape == (16, 16)
            assert set(boundary.ravel().tolist()) <= {0, 1}

    def test_rerun_is_idempotent(self, scene):
        before = _files(scene / "pseudo")
        assert main(["pseudo", "--scene", str(scene), "--seed", "0"]) == 0
        assert _files(scene / "pseudo") == before


class TestTrainRender:

    def test_outputs(self, run_dir):
        assert (run_dir / "checkpoint.sspl").exists()
        log = pd.read_csv(run_dir / "train_log.csv")
        assert list(log["step"]) == [0, 1, 2]
        saved = yaml.safe_load((run_dir / "config.yaml").read_text())
        assert saved["total_steps"] == 3

    def test_steps_flag_overrides_config(self, scene, tmp_path):
        config = _write_yaml(tmp_path / "train.yaml", TRAIN)
        assert main(["train", "--scene", str(scene), "--out", str(tmp_path / "run"), "--config", config,
                     "--steps", "1"]) == 0
        assert len(pd.read_csv(tmp_path / "run" / "train_log.csv")) == 1

    def test_render(self, workdir, scene, run_dir):
        out = workdir / "renders"
        assert main(["render", "--checkpoint", str(run_dir / "checkpoint.sspl"), "--scene", str(scene),
                     "--out", str(out), "--pca"]) == 0
        for sub in ("rgb", "segmentation", "pca"):
            assert len(list((out / sub).glob("*.png"))) == 4
        labels = read_index_map(out / "segmentation" / "view_000.png")
        assert labels.shape == (16, 16)
        assert labels.max() < 3
        palette = yaml.safe_load((out / "palette.yaml").read_text())
        assert sorted(palette["classes"]) == [0, 1, 2]

    def test_render_selected_views(self, tmp_path, scene, run_dir):
        assert main(["render", "--checkpoint", str(run_dir / "checkpoint.sspl"), "--scene", str(scene),
                     "--out", str(tmp_path), "--views", "view_002"]) == 0
        assert [p.name for p in (tmp_path / "rgb").glob("*.png")] == ["view_002.png"]

    def test_visualize_per_scene(self, tmp_path, scene, run_dir):
        assert main(["visualize", "--checkpoint", str(run_dir / "checkpoint.sspl"), "--scene", str(scene),
                     "--out", str(tmp_path), "--per-scene"]) == 0
        assert len(list(tmp_path.glob("*.png"))) == 4


class TestEval:

    def test_identity_scores_one(self, tmp_path, scene):
        assert main(["eval", "--pred", str(scene / "oracle"), "--gt", str(scene / "oracle"),
                     "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["miou"] == pytest.approx(1.0)
        assert summary["num_views"] == 4
        per_view = pd.read_csv(tmp_path / "per_view.csv")
        assert len(per_view) == 4

    def test_with_timing(self, tmp_path, scene, run_dir):
        renders = tmp_path / "renders"
        main(["render", "--checkpoint", str(run_dir / "checkpoint.sspl"), "--scene", str(scene),
              "--out", str(renders)])
        assert main(["eval", "--pred", str(renders / "segmentation"), "--gt", str(scene / "oracle"),
                     "--out", str(tmp_path / "metrics"), "--num-classes", "3",
                     "--checkpoint", str(run_dir / "checkpoint.sspl"), "--scene", str(scene)]) == 0
        summary = json.loads((tmp_path / "metrics" / "summary.json").read_text())
        assert 0.0 <= summary["miou"] <= 1.0
        assert summary["timing"]["num_views"] == 3
        assert (tmp_path / "metrics" / "timing.csv").exists()

    def test_missing_prediction(self, tmp_path, scene, capsys):
        (tmp_path / "pred").mkdir()
        code = main(["eval", "--pred", str(tmp_path / "pred"), "--gt", str(scene / "oracle"),
                     "--out", str(tmp_path / "metrics")])
        assert code == 3
        assert "MISSING_FILE:" in capsys.readouterr().err


class TestExitCodes:

    def test_config_error(self, tmp_path, scene, capsys):
        config = _write_yaml(tmp_path / "bad.yaml", {"total_stepz": 1})
        code = main(["train", "--scene", str(scene), "--out", str(tmp_path / "run"), "--config", config])
        assert code == 2
        assert "CONFIG_ERROR:" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path, scene):
        code = main(["render", "--checkpoint", str(tmp_path / "none.sspl"), "--scene", str(scene),
                     "--out", str(tmp_path / "out")])
        assert code == 3

    def test_bad_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SEMSPLAT_SEED", "abc")
        assert main(["synth", "--out", str(tmp_path / "s")]) == 2

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


@pytest.mark.slow
def test_ablation_study(tmp_path, scene):
    config = _write_yaml(tmp_path / "train.yaml", {**TRAIN, "total_steps": 2})
    assert main(["ablate", "--scene", str(scene), "--out", str(tmp_path), "--config", config,
                 "--seeds", "0", "1", "--study", "ablation"]) == 0
    frame = pd.read_csv(tmp_path / "ablation.csv")
    assert list(frame["variant"].unique()) == ["baseline", "+pseudo", "+agg2d", "+agg3d"]
    assert len(frame) == 8
    assert frame["miou"].between(0.0, 1.0).all()
