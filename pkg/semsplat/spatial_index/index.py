"""
Exact k-nearest-neighbour queries over a snapshot of point positions.

scipy's cKDTree supplies candidates; the final order is decided on exact
squared distances with ties broken by ascending point index.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from semsplat.exceptions import EmptyInput, KTooLarge

logger = logging.getLogger(__name__)

_RADIUS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class SpatialIndex:
    """kd-tree over an immutable copy of N x 3 positions"""
    positions: np.ndarray
    tree: cKDTree
    generation: int = 0

    @property
    def num_points(self) -> int:
        return self.positions.shape[0]


def build(positions: np.ndarray, generation: int = 0) -> SpatialIndex:
    """
    Raises:
        EmptyInput: no positions
    """
    positions = np.array(positions, dtype=np.float64, copy=True).reshape(-1, 3)
    if positions.shape[0] == 0:
        raise EmptyInput("cannot build a spatial index over zero points")
    positions.setflags(write=False)
    index = SpatialIndex(positions, cKDTree(positions), generation)
    logger.debug("built spatial index generation %d over %d points", generation, positions.shape[0])
    return index


def _check_k(index: SpatialIndex, k: int, excluding: bool) -> None:
    available = index.num_points - (1 if excluding else 0)
    if k < 0 or k > available:
        raise KTooLarge(k, available)


def _squared_distances(positions: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = positions - query
    return np.sum(diff * diff, axis=-1)


def knn(index: SpatialIndex, query: np.ndarray, k: int, exclude: Optional[int] = None) -> np.ndarray:
    """
    The k nearest points to ``query``, nearest first.

    Args:
        exclude: point index never returned (usually the query point itself)

    Raises:
        KTooLarge: k exceeds the points available after exclusion
    """
    excluding = exclude is not None and 0 <= exclude < index.num_points
    _check_k(index, k, excluding)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    query = np.asarray(query, dtype=np.float64).reshape(3)

    kk = min(k + (1 if excluding else 0), index.num_points)
    dist, _ = index.tree.query(query, k=kk)
    radius = float(np.max(dist))
    candidates = np.asarray(
        index.tree.query_ball_point(query, radius * (1.0 + _RADIUS_SLACK) + 1e-15), dtype=np.int64
    )
    if excluding:
        candidates = candidates[candidates != exclude]
    d2 = _squared_distances(index.positions[candidates], query)
    order = np.lexsort((candidates, d2))
    return candidates[order[:k]]


def knn_batch(
        index: SpatialIndex,
        queries: np.ndarray,
        k: int,
        exclude: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    ``knn`` for many queries at once, M x k indices.

    Rows whose k-th neighbour may tie with a point outside the candidate
    set fall back to the exact single-query path.
    """
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    m = queries.shape[0]
    excluding = exclude is not None
    _check_k(index, k, excluding)
    if k == 0 or m == 0:
        return np.empty((m, k), dtype=np.int64)

    n = index.num_points
    kk = min(k + 2, n)
    _, cand = index.tree.query(queries, k=kk)
    cand = np.asarray(cand, dtype=np.int64).reshape(m, kk)
    d2 = np.sum((index.positions[cand] - queries[:, None, :]) ** 2, axis=-1)
    if excluding:
        exclude = np.asarray(exclude, dtype=np.int64).reshape(m)
        d2 = np.where(cand == exclude[:, None], np.inf, d2)
    order = np.lexsort((cand, d2), axis=-1)
    cand = np.take_along_axis(cand, order, axis=-1)
    d2 = np.take_along_axis(d2, order, axis=-1)
    result = cand[:, :k].copy()

    if kk < n:
        # the farthest listed candidate bounds every unlisted point
        bound = np.max(np.where(np.isinf(d2), -np.inf, d2), axis=-1)
        kth = d2[:, k - 1]
        unsure = np.flatnonzero(~(bound > kth * (1.0 + 1e-9) + 1e-18))
        for row in unsure:
            result[row] = knn(index, queries[row], k, exclude=int(exclude[row]) if excluding else None)
    return result
