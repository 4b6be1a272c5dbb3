"""
The commands behind ``semsplat <command>``. Each takes plain paths and
config records so it can be called from Python as well as from the shell.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from semsplat.camera.colmap import parse_colmap
from semsplat.camera.types import Camera
from semsplat.cli.synth import generate_scene
from semsplat.cloud.checkpoint import Checkpoint, load_checkpoint
from semsplat.config import LossWeights, SynthConfig, TrainConfig
from semsplat.eval.metrics import per_view_report
from semsplat.eval.pca import fit_pca_basis, pca_visualize
from semsplat.eval.predict import evaluate_views, predict_labels
from semsplat.eval.report import write_class_iou, write_summary, write_timing, write_view_report
from semsplat.eval.timing import timing_report
from semsplat.exceptions import CorruptCheckpoint, InvalidInstanceMasks, MissingFile, MissingReferenceLabel, \
    ShapeMismatch
from semsplat.losses.semantic import IGNORE_INDEX
from semsplat.pseudolabel.builder import DEFAULT_MARGIN, RANDOM_REFERENCE, build_pseudo_labels, choose_reference_view
from semsplat.pseudolabel.io import load_instance_masks, write_pseudo_labels
from semsplat.pseudolabel.types import PseudoLabelSet
from semsplat.rasterizer.blending import render
from semsplat.trainer.scene import Scene, load_scene, read_scene_meta, view_id_of
from semsplat.trainer.trainer import Trainer, TrainResult
from semsplat.utils.images import default_palette, read_index_map, write_index_map, write_rgb

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ABLATION_STUDY = "ablation"
RATIO_STUDY = "ratio"
AGG2D_STUDY = "agg2d_coefficient"
AGG3D_STUDY = "agg3d_coefficient"
STUDIES = (ABLATION_STUDY, RATIO_STUDY, AGG2D_STUDY, AGG3D_STUDY)

STUDY_RATIOS = ((1, 2), (1, 4), (1, 8), (1, 16))
STUDY_COEFFICIENTS = (1.0, 0.5, 0.1)


# ============================ <<< Scene preparation >>> =====================================================
def cmd_synth(config: SynthConfig, out: PathLike) -> Path:
    return generate_scene(config, out)


def _stems(directory: Path) -> List[str]:
    return sorted(p.stem for p in directory.glob("*.png")) if directory.is_dir() else []


def cmd_pseudo(
        scene: PathLike,
        reference: str = RANDOM_REFERENCE,
        margin: float = DEFAULT_MARGIN,
        seed: int = 0,
) -> PseudoLabelSet:
    """
    Build pseudo labels from ``instances/`` and one labeled view, and write
    them to ``pseudo/``. Existing files are overwritten.

    Raises:
        InvalidInstanceMasks: an image has no entry in the instance manifest
        MissingReferenceLabel: the reference view has no ground-truth label
    """
    scene = Path(scene)
    masks = load_instance_masks(scene / "instances")
    missing = [v for v in _stems(scene / "images") if v not in masks]
    if missing:
        raise InvalidInstanceMasks(
            f"instance manifest has no entry for view '{missing[0]}'", details={"missing": missing},
        )

    labeled = _stems(scene / "labels")
    view_id = choose_reference_view(labeled, reference, seed)
    label_path = scene / "labels" / f"{view_id}.png"
    if not label_path.exists():
        raise MissingReferenceLabel(view_id)

    pseudo = build_pseudo_labels(masks, view_id, read_index_map(label_path), margin)
    write_pseudo_labels(scene / "pseudo", pseudo)
    logger.info(
        "pseudo labels from reference '%s': %d instances, %d in the boundary region",
        view_id, len(pseudo.classes), len(pseudo.flagged),
    )
    return pseudo


# ============================ <<< Training >>> ==============================================================
def cmd_train(scene: PathLike, config: TrainConfig, out: Optional[PathLike] = None) -> TrainResult:
    loaded = load_scene(scene, use_pseudo_labels=config.use_pseudo_labels, dtype=np.dtype(config.dtype))
    return Trainer(loaded, config, out).run()


# ============================ <<< Rendering >>> =============================================================
def _load_for_render(checkpoint: PathLike) -> Checkpoint:
    ckpt = load_checkpoint(checkpoint)
    if ckpt.decoder is None:
        raise CorruptCheckpoint(str(checkpoint), "no decoder section; cannot segment")
    return ckpt


def _select_cameras(scene: Path, views: Optional[Sequence[str]]) -> List[Camera]:
    cameras, _ = parse_colmap(scene / "colmap")
    if views is None:
        return cameras
    by_id = {view_id_of(c): c for c in cameras}
    unknown = [v for v in views if v not in by_id]
    if unknown:
        raise MissingFile(str(scene / "colmap" / "images.txt"), f"no pose for view '{unknown[0]}'")
    return [by_id[v] for v in views]


def _palette(scene: Path) -> np.ndarray:
    palette = default_palette()
    meta = read_scene_meta(scene)
    if "palette" in meta:
        colors = np.asarray(meta["palette"], dtype=np.uint8).reshape(-1, 3)
        palette[:len(colors)] = colors
    return palette


def cmd_render(
        checkpoint: PathLike,
        scene: PathLike,
        out: PathLike,
        views: Optional[Sequence[str]] = None,
        pca: bool = False,
        threads: int = 1,
) -> List[str]:
    """
    Render RGB and argmax segmentation (indexed PNG) for every pose of the
    scene, or only ``views``. A ``palette.yaml`` sidecar maps class ids to
    colours.

    Returns:
        The view ids written
    """
    scene, out = Path(scene), Path(out)
    ckpt = _load_for_render(checkpoint)
    cameras = _select_cameras(scene, views)
    if not cameras:
        return []

    palette = _palette(scene)
    written = []
    for camera in cameras:
        view_id = view_id_of(camera)
        labels, output = predict_labels(ckpt.cloud, ckpt.decoder, camera, threads=threads)
        write_rgb(out / "rgb" / f"{view_id}.png", output.color_image)
        write_index_map(out / "segmentation" / f"{view_id}.png", labels, palette)
        if pca:
            write_rgb(out / "pca" / f"{view_id}.png", pca_visualize(output.feature_map))
        written.append(view_id)

    num_classes = ckpt.decoder.num_classes
    sidecar = {"classes": {c: palette[c].tolist() for c in range(num_classes)}}
    (out / "palette.yaml").write_text(yaml.safe_dump(sidecar, sort_keys=True), encoding="utf-8")
    logger.info("rendered %d views to %s", len(written), out)
    return written


def cmd_visualize(
        checkpoint: PathLike,
        scene: PathLike,
        out: PathLike,
        per_scene: bool = False,
        views: Optional[Sequence[str]] = None,
        threads: int = 1,
) -> List[str]:
    """PCA images of rendered feature maps, fitted per view or once over all views"""
    scene, out = Path(scene), Path(out)
    ckpt = load_checkpoint(checkpoint)

    maps: Dict[str, np.ndarray] = {}
    for camera in _select_cameras(scene, views):
        maps[view_id_of(camera)] = render(ckpt.cloud, camera, threads=threads).feature_map
    if not maps:
        return []

    basis = fit_pca_basis(list(maps.values())) if per_scene else None
    for view_id, feature_map in maps.items():
        write_rgb(out / f"{view_id}.png", pca_visualize(feature_map, basis=basis))
    logger.info("wrote %d PCA images (%s basis) to %s", len(maps), "scene" if per_scene else "per-view", out)
    return list(maps)


# ============================ <<< Evaluation >>> ============================================================
def _read_label_dir(directory: Path) -> Dict[str, Tuple[Path, np.ndarray]]:
    if not directory.is_dir():
        raise MissingFile(str(directory))
    return {p.stem: (p, read_index_map(p)) for p in sorted(directory.glob("*.png"))}


def _infer_num_classes(*maps: np.ndarray) -> int:
    top = 0
    for m in maps:
        scored = m[m != IGNORE_INDEX]
        if scored.size:
            top = max(top, int(scored.max()) + 1)
    return top


def cmd_eval(
        predictions: PathLike,
        ground_truth: PathLike,
        out: PathLike,
        num_classes: Optional[int] = None,
        class_names: Sequence[str] = (),
        checkpoint: Optional[PathLike] = None,
        scene: Optional[PathLike] = None,
        threads: int = 1,
) -> Dict[str, object]:
    """
    Score predicted label maps against ground truth, file names matched
    by view id. With a checkpoint and scene, render timings are added.

    Writes ``class_iou.csv``, ``per_view.csv``, ``summary.json`` (and
    ``timing.csv``) to ``out``.

    Raises:
        MissingFile: a ground-truth view has no prediction
        ShapeMismatch: a prediction differs in size from its ground truth (names the file)
    """
    out = Path(out)
    preds = _read_label_dir(Path(predictions))
    gts = _read_label_dir(Path(ground_truth))
    for view_id, (gt_path, gt) in gts.items():
        if view_id not in preds:
            raise MissingFile(str(Path(predictions) / gt_path.name), f"no prediction for view '{view_id}'")
        pred_path, pred = preds[view_id]
        if pred.shape != gt.shape:
            raise ShapeMismatch(
                f"{pred_path} is {pred.shape[1]}x{pred.shape[0]}, ground truth is {gt.shape[1]}x{gt.shape[0]}",
                expected=gt.shape, actual=pred.shape, path=str(pred_path),
            )

    pred_maps = {v: preds[v][1] for v in gts}
    gt_maps = {v: m for v, (_, m) in gts.items()}
    if num_classes is None:
        num_classes = _infer_num_classes(*pred_maps.values(), *gt_maps.values())
    report = per_view_report(pred_maps, gt_maps, num_classes)

    write_class_iou(out / "class_iou.csv", report.overall, class_names)
    write_view_report(out / "per_view.csv", report)
    summary: Dict[str, object] = dict(report.summary())
    if checkpoint is not None and scene is not None:
        ckpt = load_checkpoint(checkpoint)
        timing = timing_report(ckpt.cloud, _select_cameras(Path(scene), None), threads=threads)
        write_timing(out / "timing.csv", timing)
        summary["timing"] = timing.summary()
    write_summary(out / "summary.json", summary)
    logger.info("mIoU %.4f over %d views", report.overall.mean, len(gt_maps))
    return summary


# ============================ <<< Ablation >>> ==============================================================
def ablation_variants(config: TrainConfig, studies: Sequence[str] = STUDIES) -> List[Tuple[str, str, TrainConfig]]:
    """(study, variant, config) rows; ablation rows add one component at a time"""
    a, b = config.weights.a, config.weights.b
    rows: List[Tuple[str, str, TrainConfig]] = []
    if ABLATION_STUDY in studies:
        rows += [
            (ABLATION_STUDY, "baseline",
             config.with_overrides(use_pseudo_labels=False, weights=LossWeights(a=0.0, b=0.0))),
            (ABLATION_STUDY, "+pseudo",
             config.with_overrides(use_pseudo_labels=True, weights=LossWeights(a=0.0, b=0.0))),
            (ABLATION_STUDY, "+agg2d",
             config.with_overrides(use_pseudo_labels=True, weights=LossWeights(a=a, b=0.0))),
            (ABLATION_STUDY, "+agg3d",
             config.with_overrides(use_pseudo_labels=True, weights=LossWeights(a=a, b=b))),
        ]
    if RATIO_STUDY in studies:
        rows += [
            (RATIO_STUDY, f"{g}:{p}", config.with_overrides(use_pseudo_labels=True, gt_to_pseudo_ratio=(g, p)))
            for g, p in STUDY_RATIOS
        ]
    if AGG2D_STUDY in studies:
        rows += [
            (AGG2D_STUDY, f"a={c}", config.with_overrides(use_pseudo_labels=True, weights=LossWeights(a=c, b=b)))
            for c in STUDY_COEFFICIENTS
        ]
    if AGG3D_STUDY in studies:
        rows += [
            (AGG3D_STUDY, f"b={c}", config.with_overrides(use_pseudo_labels=True, weights=LossWeights(a=a, b=c)))
            for c in STUDY_COEFFICIENTS
        ]
    return rows


def held_out_score(result: TrainResult, scene: Scene, oracle_dir: Path, threads: int = 1) -> float:
    """mIoU over the views without ground-truth labels, against the oracle maps"""
    held_out = [v for v in scene.views if not v.has_gt]
    if not held_out:
        held_out = scene.views
    labels = {v.view_id: read_index_map(oracle_dir / f"{v.view_id}.png") for v in held_out}
    report = evaluate_views(
        result.cloud, result.decoder, [v.camera for v in held_out], labels, [v.view_id for v in held_out], threads,
    )
    return report.overall.mean


def cmd_ablate(
        scene: PathLike,
        config: TrainConfig,
        out: PathLike,
        seeds: Sequence[int] = (0, 1, 2),
        studies: Sequence[str] = STUDIES,
) -> pd.DataFrame:
    """
    Train every variant for every seed and score it on held-out views.

    Writes ``ablation.csv`` (one row per run) and ``ablation_summary.csv``
    (mean and std per variant).
    """
    scene, out = Path(scene), Path(out)
    loaded = load_scene(scene, use_pseudo_labels=True, dtype=np.dtype(config.dtype))
    rows = []
    for study, variant, variant_config in ablation_variants(config, studies):
        for seed in seeds:
            run_config = variant_config.with_overrides(seed=seed)
            result = Trainer(loaded, run_config).run()
            score = held_out_score(result, loaded, scene / "oracle", run_config.threads)
            logger.info("%s %s seed %d: held-out mIoU %.4f", study, variant, seed, score)
            rows.append({"study": study, "variant": variant, "seed": seed, "miou": score})

    frame = pd.DataFrame(rows, columns=["study", "variant", "seed", "miou"])
    out.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out / "ablation.csv", index=False)
    summary = (
        frame.groupby(["study", "variant"], sort=False)["miou"]
        .agg(["mean", "std", "count"])
        .reset_index()
    )
    summary.to_csv(out / "ablation_summary.csv", index=False)
    return frame
