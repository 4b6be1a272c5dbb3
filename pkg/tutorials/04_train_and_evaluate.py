"""
Tutorial 04: Train a short run with pseudo labels and both aggregation
losses, then score held-out views against the oracle labels.

Prerequisites:
  python tutorials/01_synthetic_scene.py
  python tutorials/03_pseudo_labels.py

Run:
  python tutorials/04_train_and_evaluate.py
"""

from pathlib import Path

from semsplat.config import TrainConfig
from semsplat.eval import evaluate_views, pca_visualize
from semsplat.rasterizer import render
from semsplat.trainer import load_scene, run
from semsplat.utils import get_logger, read_index_map, write_rgb


def main() -> None:
    get_logger("semsplat", level="INFO")
    root = Path("runs/tutorial_scene")
    scene = load_scene(root)

    config = TrainConfig(total_steps=300, log_interval=50, agg2d_samples=256, agg3d_samples=256, threads=2)
    result = run(scene, config, out_dir="runs/tutorial_train")
    print(f"final loss {result.log['total'].iloc[-1]:.4f} with {result.cloud.num_points} points")

    held_out = [v for v in scene.views if not v.has_gt]
    labels = {v.view_id: read_index_map(root / "oracle" / f"{v.view_id}.png") for v in held_out}
    report = evaluate_views(
        result.cloud, result.decoder, [v.camera for v in held_out], labels, [v.view_id for v in held_out], threads=2,
    )
    print(f"held-out mIoU {report.overall.mean:.4f} (per view std {report.std:.4f})")

    features = render(result.cloud, held_out[0].camera).feature_map
    write_rgb("runs/tutorial_train/pca.png", pca_visualize(features))


if __name__ == "__main__":
    main()
