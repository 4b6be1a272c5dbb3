"""
File layer: instance maps listed in ``manifest.csv`` and pseudo labels
written as ``<view>_label.png`` / ``<view>_boundary.png``.
"""
import logging
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

from semsplat.exceptions import MissingFile, ParseError
from semsplat.pseudolabel.types import InstanceMaskSet, PseudoLabelSet
from semsplat.utils.images import read_index_map, write_index_map

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ("view_id", "file")
LABEL_SUFFIX = "_label.png"
BOUNDARY_SUFFIX = "_boundary.png"

PathLike = Union[str, Path]


def read_manifest(path: PathLike) -> pd.DataFrame:
    """
    Raises:
        MissingFile: no manifest
        ParseError: missing columns or duplicate view ids
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(str(path), 1, f"unreadable manifest: {e}")
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(str(path), 1, f"manifest lacks columns {missing}")
    duplicated = frame["view_id"].duplicated()
    if duplicated.any():
        first = int(np.flatnonzero(duplicated.to_numpy())[0])
        # header is line 1
        raise ParseError(str(path), first + 2, f"duplicate view id '{frame['view_id'].iloc[first]}'")
    return frame


def write_manifest(path: PathLike, entries: Dict[str, str]) -> None:
    frame = pd.DataFrame({"view_id": list(entries), "file": list(entries.values())})
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


def load_instance_masks(directory: PathLike) -> InstanceMaskSet:
    """Read every instance map the manifest in ``directory`` lists"""
    directory = Path(directory)
    frame = read_manifest(directory / MANIFEST_NAME)
    maps = {
        row.view_id: read_index_map(directory / row.file)
        for row in frame.itertuples(index=False)
    }
    logger.debug("loaded %d instance maps from %s", len(maps), directory)
    return InstanceMaskSet(maps)


def write_pseudo_labels(directory: PathLike, labels: PseudoLabelSet) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for view_id in labels.view_ids():
        write_index_map(directory / f"{view_id}{LABEL_SUFFIX}", labels.labels[view_id])
        write_index_map(directory / f"{view_id}{BOUNDARY_SUFFIX}", labels.boundary[view_id])
    logger.info("wrote pseudo labels for %d views to %s", len(labels), directory)


def load_pseudo_labels(directory: PathLike) -> PseudoLabelSet:
    """
    Raises:
        MissingFile: a label map without its boundary mask
    """
    directory = Path(directory)
    labels, boundary = {}, {}
    for label_path in sorted(directory.glob(f"*{LABEL_SUFFIX}")):
        view_id = label_path.name[: -len(LABEL_SUFFIX)]
        labels[view_id] = read_index_map(label_path)
        boundary[view_id] = read_index_map(directory / f"{view_id}{BOUNDARY_SUFFIX}")
    return PseudoLabelSet(labels, boundary)
