"""
semsplat Pseudo Labels - boundary masks and propagated classes from instance masks

Quick Start:
    ```python
    from semsplat.pseudolabel import build_pseudo_labels, load_instance_masks, write_pseudo_labels

    masks = load_instance_masks("scene/instances")
    pseudo = build_pseudo_labels(masks, "view_000", gt_labels, margin_fraction=0.15)
    write_pseudo_labels("scene/pseudo", pseudo)
    ```
"""
from semsplat.pseudolabel.types import UNASSIGNED, InstanceMaskSet, PseudoLabelSet
from semsplat.pseudolabel.builder import (
    DEFAULT_MARGIN,
    RANDOM_REFERENCE,
    assign_pseudo_class,
    border_distance,
    build_pseudo_labels,
    choose_reference_view,
    derive_boundary_mask,
)
from semsplat.pseudolabel.io import (
    MANIFEST_NAME,
    load_instance_masks,
    load_pseudo_labels,
    read_manifest,
    write_manifest,
    write_pseudo_labels,
)

__all__ = [
    "UNASSIGNED",
    "InstanceMaskSet",
    "PseudoLabelSet",
    "DEFAULT_MARGIN",
    "RANDOM_REFERENCE",
    "assign_pseudo_class",
    "border_distance",
    "build_pseudo_labels",
    "choose_reference_view",
    "derive_boundary_mask",
    "MANIFEST_NAME",
    "load_instance_masks",
    "load_pseudo_labels",
    "read_manifest",
    "write_manifest",
    "write_pseudo_labels",
]
