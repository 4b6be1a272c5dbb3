"""
Deterministic view schedule at a fixed ground-truth : pseudo ratio.

Steps are grouped in blocks of g + p. In each block exactly g positions,
picked from a per-block seeded generator, draw from the ground-truth pool
and the rest from the pseudo pool; the view within a pool is drawn
uniformly from a per-step generator.
"""
from typing import Generic, List, Sequence, Tuple, TypeVar

import numpy as np

from semsplat.exceptions import EmptyPool

T = TypeVar("T")

GT_POOL = "gt"
PSEUDO_POOL = "pseudo"


class ViewSampler(Generic[T]):

    def __init__(
            self,
            gt_views: Sequence[T],
            pseudo_views: Sequence[T],
            ratio: Tuple[int, int] = (1, 8),
            seed: int = 0,
            use_pseudo: bool = True,
    ):
        """
        Raises:
            EmptyPool: no ground-truth views, or pseudo views are required but absent
        """
        self.gt_views: List[T] = list(gt_views)
        self.pseudo_views: List[T] = list(pseudo_views) if use_pseudo else []
        self.ratio = ratio
        self.seed = seed
        self.use_pseudo = use_pseudo
        if not self.gt_views:
            raise EmptyPool(GT_POOL)
        if use_pseudo and not self.pseudo_views:
            raise EmptyPool(PSEUDO_POOL)

    @property
    def block_length(self) -> int:
        return self.ratio[0] + self.ratio[1]

    def pool_at(self, step: int) -> str:
        if not self.use_pseudo:
            return GT_POOL
        block, position = divmod(step, self.block_length)
        rng = np.random.default_rng([self.seed, 0, block])
        gt_slots = rng.choice(self.block_length, size=self.ratio[0], replace=False)
        return GT_POOL if position in gt_slots else PSEUDO_POOL

    def sample(self, step: int) -> T:
        pool = self.gt_views if self.pool_at(step) == GT_POOL else self.pseudo_views
        rng = np.random.default_rng([self.seed, 1, step])
        return pool[int(rng.integers(len(pool)))]


def sample_view(gt_views: Sequence[T], pseudo_views: Sequence[T], step: int, seed: int,
                ratio: Tuple[int, int] = (1, 8)) -> T:
    """Single draw of the schedule; ``ViewSampler`` avoids re-validating pools every step"""
    return ViewSampler(gt_views, pseudo_views, ratio, seed).sample(step)
