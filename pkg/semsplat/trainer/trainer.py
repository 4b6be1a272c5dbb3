"""
The training loop and its outputs (checkpoint, per-step CSV log, config).
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from semsplat.cloud.checkpoint import save_checkpoint
from semsplat.cloud.gaussians import GaussianCloud, init_from_points
from semsplat.config import TrainConfig, config_to_file
from semsplat.decoder.mlp import SemanticDecoder
from semsplat.exceptions import ShapeMismatch
from semsplat.losses.total import CSV_COLUMNS
from semsplat.spatial_index.index import SpatialIndex, build
from semsplat.trainer.adam import AdamState
from semsplat.trainer.density import DensityStats, densify_and_prune
from semsplat.trainer.sampler import ViewSampler
from semsplat.trainer.scene import Scene
from semsplat.trainer.step import SPLIT_STREAM, step_seed, train_step

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.sspl"
LOG_NAME = "train_log.csv"
CONFIG_NAME = "config.yaml"


@dataclass
class TrainResult:
    cloud: GaussianCloud
    decoder: SemanticDecoder
    log: pd.DataFrame
    checkpoint: Optional[Path]
    densify_events: int


def config_digest(config: TrainConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:12]


class Trainer:
    """
    Owns the mutable training state: cloud, decoder, Adam moments, spatial
    index and densification statistics.

    Args:
        scene: loaded scene bundle
        config: training configuration
        out_dir: where checkpoint, log and config are written (None keeps everything in memory)
    """

    def __init__(self, scene: Scene, config: TrainConfig, out_dir: Optional[Union[str, Path]] = None):
        self.scene = scene
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else None
        dtype = np.dtype(config.dtype)

        self.cloud = init_from_points(
            scene.points, feature_dim=config.feature_dim, seed=config.seed,
            sh_degree=config.sh_degree, dtype=dtype,
        )
        if self.cloud.num_points > config.max_points:
            raise ShapeMismatch(
                f"scene has {self.cloud.num_points} initial points, above max_points {config.max_points}",
                expected=config.max_points, actual=self.cloud.num_points,
            )
        self.decoder = SemanticDecoder.create(
            config.feature_dim, scene.num_classes, hidden=config.decoder_hidden, seed=config.seed, dtype=dtype,
        )
        self.adam = AdamState.for_model(self.cloud, self.decoder)
        self.stats = DensityStats(self.cloud.num_points)
        self.index: SpatialIndex = build(self.cloud.positions, generation=0)
        self.sampler = ViewSampler(
            scene.gt_views, scene.pseudo_views, config.gt_to_pseudo_ratio, config.seed,
            use_pseudo=config.use_pseudo_labels,
        )
        self.rows: List[dict] = []
        self.densify_events = 0

    def _log_assumptions(self) -> None:
        c = self.config
        logger.info(
            "run %s: %d views (%d gt, %d pseudo), %d points, %d classes, %d steps",
            config_digest(c), len(self.scene.views), len(self.sampler.gt_views), len(self.sampler.pseudo_views),
            self.cloud.num_points, self.scene.num_classes, c.total_steps,
        )
        logger.info(
            "assumptions: spatial index rebuilt every %d steps at densify events; "
            "pseudo supervision restricted to boundary masks; opacity reset disabled",
            c.densify.interval,
        )

    def _densify(self, step: int) -> None:
        c = self.config
        result = densify_and_prune(
            self.cloud, self.stats.mean_grad(), c.densify, self.scene.extent, c.max_points,
            seed=step_seed(c.seed, step, SPLIT_STREAM),
        )
        self.cloud = result.cloud
        self.adam.remap(result.keep, result.num_new)
        self.stats.reset(self.cloud.num_points)
        self.index = build(self.cloud.positions, generation=self.index.generation + 1)
        self.densify_events += 1
        logger.info(
            "step %d densify: cloned %d, split %d, pruned %d, N=%d, index generation %d",
            step, result.cloned, result.split, result.pruned, self.cloud.num_points, self.index.generation,
        )

    def step(self, step: int) -> None:
        view = self.sampler.sample(step)
        result = train_step(self.cloud, self.decoder, view, self.config, self.adam, self.index, step)
        self.rows.append(result.report.as_row(step))
        self.stats.update(result.grads.means2d, result.output.visible)

        c = self.config
        done = step + 1
        if done % c.densify.interval == 0 and done < c.densify_until:
            self._densify(done)
        if done % c.log_interval == 0:
            window = pd.DataFrame(self.rows[-c.log_interval:])
            logger.info(
                "step %d: total %.5f (l1 %.5f, dssim %.5f, ce %.5f, agg2d %.5f, agg3d %.5f), N=%d",
                done, window["total"].mean(), window["l1"].mean(), window["dssim"].mean(), window["ce"].mean(),
                window["agg2d"].mean(), window["agg3d"].mean(), self.cloud.num_points,
            )

    def log_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(CSV_COLUMNS))

    def run(self) -> TrainResult:
        """
        Run ``total_steps`` steps and write the outputs.

        Raises:
            NonFiniteLoss: a loss term became NaN or infinite (carries the step)
        """
        self._log_assumptions()
        for step in range(self.config.total_steps):
            self.step(step)

        log = self.log_frame()
        checkpoint = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            checkpoint = save_checkpoint(self.out_dir / CHECKPOINT_NAME, self.cloud, self.decoder)
            log.to_csv(self.out_dir / LOG_NAME, index=False)
            config_to_file(self.config, self.out_dir / CONFIG_NAME)
        logger.info(
            "finished %d steps: %d points, %d densify events",
            self.config.total_steps, self.cloud.num_points, self.densify_events,
        )
        return TrainResult(self.cloud, self.decoder, log, checkpoint, self.densify_events)


def run(scene: Scene, config: TrainConfig, out_dir: Optional[Union[str, Path]] = None) -> TrainResult:
    return Trainer(scene, config, out_dir).run()
