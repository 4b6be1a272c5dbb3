"""
semsplat - semantic Gaussian splatting for multi-view segmentation with
sparse labels.

Quick Start:
    ```python
    from semsplat.config import TrainConfig
    from semsplat.trainer import load_scene, run
    from semsplat.eval import miou, predict_labels

    scene = load_scene("scene")
    result = run(scene, TrainConfig(total_steps=5000), out_dir="runs/demo")
    labels, _ = predict_labels(result.cloud, result.decoder, scene.views[0].camera)
    ```
"""
from semsplat.config import DensifyConfig, LearningRates, LossWeights, SynthConfig, TrainConfig
from semsplat.exceptions import SemsplatError

__version__ = "0.3.0"

__all__ = [
    "DensifyConfig",
    "LearningRates",
    "LossWeights",
    "SynthConfig",
    "TrainConfig",
    "SemsplatError",
    "__version__",
]
