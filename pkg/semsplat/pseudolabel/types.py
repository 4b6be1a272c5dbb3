from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, Mapping, Tuple

import numpy as np

from semsplat.exceptions import InvalidInstanceMasks

UNASSIGNED = 255


@dataclass(eq=False)
class InstanceMaskSet:
    """
    Per-view instance maps (0 = no instance, n = instance id). The same
    physical object carries the same id in every view.
    """
    maps: Dict[str, np.ndarray]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.maps:
            raise InvalidInstanceMasks("instance mask set is empty")
        shapes = {m.shape for m in self.maps.values()}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise InvalidInstanceMasks(
                f"instance maps must share one 2D shape, got {sorted(shapes)}", details={"shapes": sorted(shapes)}
            )
        ids = self.instance_ids
        if ids.size and not np.array_equal(ids, np.arange(1, ids.size + 1)):
            missing = sorted(set(range(1, int(ids.max()) + 1)) - set(ids.tolist()))
            raise InvalidInstanceMasks(
                f"instance ids must form a contiguous range 1..K, missing {missing[:10]}",
                details={"missing": missing[:10]},
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return next(iter(self.maps.values())).shape

    @property
    def instance_ids(self) -> np.ndarray:
        """Sorted ids present anywhere in the scene"""
        ids = np.unique(np.concatenate([np.unique(m) for m in self.maps.values()]))
        return ids[ids != 0]

    @property
    def num_instances(self) -> int:
        return int(self.instance_ids.size)

    def view_ids(self) -> Iterator[str]:
        return iter(self.maps)

    def __getitem__(self, view_id: str) -> np.ndarray:
        return self.maps[view_id]

    def __contains__(self, view_id: str) -> bool:
        return view_id in self.maps

    def __len__(self) -> int:
        return len(self.maps)


@dataclass(eq=False)
class PseudoLabelSet:
    """
    Per-view pseudo labels S^p (class ids, 255 unassigned) and boundary
    masks B in {0, 1}, plus the per-instance decisions they came from.
    """
    labels: Dict[str, np.ndarray]
    boundary: Dict[str, np.ndarray]
    classes: Mapping[int, int] = field(default_factory=dict)
    flagged: FrozenSet[int] = frozenset()
    reference_view: str = ""

    def view_ids(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, view_id: str) -> bool:
        return view_id in self.labels

    def __len__(self) -> int:
        return len(self.labels)
