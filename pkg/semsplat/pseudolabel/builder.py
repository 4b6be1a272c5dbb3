"""
Pseudo labels from cross-view consistent instance masks.

On a reference view with ground truth, every instance takes the majority
class of its pixels; instances near the image border are flagged as
boundary instances. The classes then travel by instance id to every view,
and each view's boundary mask covers the flagged instances it shows.
"""
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from semsplat.exceptions import ConfigError, InvalidInstanceMasks, MissingReferenceLabel, ShapeMismatch
from semsplat.losses.semantic import IGNORE_INDEX
from semsplat.pseudolabel.types import UNASSIGNED, InstanceMaskSet, PseudoLabelSet

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 0.15
RANDOM_REFERENCE = "random"


def border_distance(shape: Tuple[int, int]) -> np.ndarray:
    """Per pixel, min(row, col, H-1-row, W-1-col)"""
    H, W = shape
    rows = np.arange(H)[:, None]
    cols = np.arange(W)[None, :]
    return np.minimum(np.minimum(rows, H - 1 - rows), np.minimum(cols, W - 1 - cols))


def _check_margin(margin_fraction: float) -> None:
    if not 0.0 < margin_fraction < 0.5:
        raise ConfigError(f"margin_fraction must lie in (0, 0.5), got {margin_fraction}", field="margin_fraction")


def derive_boundary_mask(instance_map: np.ndarray, margin_fraction: float = DEFAULT_MARGIN) -> Tuple[frozenset, np.ndarray]:
    """
    Flag instances with any pixel closer than margin_fraction * min(H, W)
    to the image border.

    Returns:
        (flagged instance ids, boundary mask B as uint8)
    """
    _check_margin(margin_fraction)
    near_border = border_distance(instance_map.shape) < margin_fraction * min(instance_map.shape)
    ids = np.unique(instance_map[near_border & (instance_map != 0)])
    flagged = frozenset(int(i) for i in ids)
    mask = np.isin(instance_map, ids).astype(np.uint8) if ids.size else np.zeros(instance_map.shape, np.uint8)
    return flagged, mask


def assign_pseudo_class(instance_map: np.ndarray, gt_labels: np.ndarray) -> Dict[int, int]:
    """
    Majority ground-truth class per instance id, ties to the smaller class;
    255 for instances with no labeled pixel.

    Raises:
        ShapeMismatch: maps differ in shape
    """
    if instance_map.shape != gt_labels.shape:
        raise ShapeMismatch(
            f"instance map {instance_map.shape} and label map {gt_labels.shape} differ",
            expected=gt_labels.shape, actual=instance_map.shape,
        )
    inst = instance_map.astype(np.int64).ravel()
    labels = gt_labels.astype(np.int64).ravel()
    ids = np.unique(inst[inst != 0])
    valid = (inst != 0) & (labels != IGNORE_INDEX)
    if not np.any(valid):
        return {int(i): UNASSIGNED for i in ids}

    num_classes = int(labels[valid].max()) + 1
    votes = np.zeros((int(inst.max()) + 1, num_classes), dtype=np.int64)
    np.add.at(votes, (inst[valid], labels[valid]), 1)

    classes = {}
    for i in ids:
        row = votes[i]
        classes[int(i)] = int(np.argmax(row)) if row.sum() > 0 else UNASSIGNED
    return classes


def choose_reference_view(labeled_views: Sequence[str], reference: str = RANDOM_REFERENCE, seed: int = 0) -> str:
    """An explicit view id, or a seeded pick among the labeled views for ``"random"``"""
    if reference != RANDOM_REFERENCE:
        return reference
    if not labeled_views:
        raise MissingReferenceLabel(RANDOM_REFERENCE)
    candidates = sorted(labeled_views)
    return candidates[int(np.random.default_rng(seed).integers(len(candidates)))]


def build_pseudo_labels(
        masks: InstanceMaskSet,
        reference_view: str,
        gt_labels: Optional[np.ndarray],
        margin_fraction: float = DEFAULT_MARGIN,
) -> PseudoLabelSet:
    """
    Propagate reference-view classes to every view by instance id.

    Raises:
        MissingReferenceLabel: no ground truth for the reference view
        InvalidInstanceMasks: the reference view has no instance map
    """
    if gt_labels is None:
        raise MissingReferenceLabel(reference_view)
    if reference_view not in masks:
        raise InvalidInstanceMasks(
            f"no instance map for reference view '{reference_view}'", details={"view_id": reference_view}
        )
    _check_margin(margin_fraction)

    ref_map = masks[reference_view]
    classes = assign_pseudo_class(ref_map, gt_labels)
    flagged, _ = derive_boundary_mask(ref_map, margin_fraction)
    # a boundary pixel must carry a class
    supervised = sorted(i for i in flagged if classes.get(i, UNASSIGNED) != UNASSIGNED)

    lut = np.full(int(masks.instance_ids.max(initial=0)) + 1, UNASSIGNED, dtype=np.uint8)
    for instance_id, cls in classes.items():
        lut[instance_id] = cls
    lut[0] = UNASSIGNED

    labels, boundary = {}, {}
    for view_id in masks.view_ids():
        inst = masks[view_id]
        labels[view_id] = lut[inst]
        boundary[view_id] = np.isin(inst, supervised).astype(np.uint8)

    logger.info(
        "pseudo labels from reference view %s: %d instances, %d assigned, %d boundary (margin %.2f)",
        reference_view, len(classes), sum(c != UNASSIGNED for c in classes.values()), len(supervised),
        margin_fraction,
    )
    return PseudoLabelSet(labels, boundary, classes, frozenset(supervised), reference_view)
