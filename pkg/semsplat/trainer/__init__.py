"""
semsplat Trainer - the optimization loop

Quick Start:
    ```python
    from semsplat.config import TrainConfig
    from semsplat.trainer import load_scene, run

    scene = load_scene("scene")
    result = run(scene, TrainConfig(total_steps=5000), out_dir="runs/demo")
    result.log.tail()
    ```
"""
from semsplat.trainer.scene import Scene, View, load_scene, view_id_of
from semsplat.trainer.sampler import GT_POOL, PSEUDO_POOL, ViewSampler, sample_view
from semsplat.trainer.adam import AdamState, learning_rates
from semsplat.trainer.density import DensifyResult, DensityStats, densify_and_prune
from semsplat.trainer.step import StepResult, step_seed, train_step
from semsplat.trainer.trainer import CHECKPOINT_NAME, CONFIG_NAME, LOG_NAME, Trainer, TrainResult, run

__all__ = [
    "Scene",
    "View",
    "load_scene",
    "view_id_of",
    "GT_POOL",
    "PSEUDO_POOL",
    "ViewSampler",
    "sample_view",
    "AdamState",
    "learning_rates",
    "DensifyResult",
    "DensityStats",
    "densify_and_prune",
    "StepResult",
    "step_seed",
    "train_step",
    "CHECKPOINT_NAME",
    "CONFIG_NAME",
    "LOG_NAME",
    "Trainer",
    "TrainResult",
    "run",
]
