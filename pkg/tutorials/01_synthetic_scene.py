"""
Tutorial 01: Generate a small synthetic scene bundle and inspect it.

The bundle holds images, dense labels for a few views, oracle labels for
every view, instance masks and a COLMAP text model.

Run:
  python tutorials/01_synthetic_scene.py
"""

from pathlib import Path

from semsplat.cli.synth import generate_scene
from semsplat.config import SynthConfig
from semsplat.trainer import load_scene


def main() -> None:
    out = Path("runs/tutorial_scene")
    config = SynthConfig(num_views=12, labeled_views=2, image_size=64, sparse_points=800, seed=0)
    generate_scene(config, out)

    scene = load_scene(out)
    print(f"views: {len(scene.views)}, labeled: {[v.view_id for v in scene.gt_views]}")
    print(f"sparse points: {len(scene.points)}, classes: {scene.class_names}")
    print(f"scene extent: {scene.extent:.3f}")


if __name__ == "__main__":
    main()
