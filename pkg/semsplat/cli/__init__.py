"""
semsplat CLI - command-line entry points

Quick Start:
    ```bash
    semsplat synth --out scene
    semsplat pseudo --scene scene
    semsplat train --scene scene --out run --steps 5000
    semsplat render --checkpoint run/checkpoint.sspl --scene scene --out renders
    semsplat eval --pred renders/segmentation --gt scene/oracle --out metrics
    ```
"""
from semsplat.cli.commands import (
    STUDIES,
    ablation_variants,
    cmd_ablate,
    cmd_eval,
    cmd_pseudo,
    cmd_render,
    cmd_synth,
    cmd_train,
    cmd_visualize,
)

__all__ = [
    "STUDIES",
    "ablation_variants",
    "cmd_ablate",
    "cmd_eval",
    "cmd_pseudo",
    "cmd_render",
    "cmd_synth",
    "cmd_train",
    "cmd_visualize",
]
