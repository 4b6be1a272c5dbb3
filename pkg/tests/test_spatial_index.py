import numpy as np
import pytest

from semsplat.exceptions import EmptyInput, KTooLarge
from semsplat.spatial_index import build, knn, knn_batch


def brute_knn(positions, query, k, exclude=None):
    d2 = np.sum((positions - query) ** 2, axis=1)
    idx = np.arange(len(positions))
    if exclude is not None:
        keep = idx != exclude
        d2, idx = d2[keep], idx[keep]
    return idx[np.lexsort((idx, d2))][:k]


def test_singleton():
    index = build(np.array([[1.0, 2.0, 3.0]]))
    assert index.num_points == 1
    assert knn(index, np.zeros(3), 0).size == 0
    assert knn(index, np.zeros(3), 1).tolist() == [0]


def test_empty():
    with pytest.raises(EmptyInput):
        build(np.zeros((0, 3)))


def test_collinear_exclude_self():
    positions = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    index = build(positions)
    assert knn(index, positions[0], 2, exclude=0).tolist() == [2, 3]


def test_ties_by_lower_index():
    positions = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    index = build(positions)
    assert knn(index, positions[0], 3, exclude=0).tolist() == [1, 2, 3]
    assert knn_batch(index, positions[:1], 2, exclude=np.array([0])).tolist() == [[1, 2]]


def test_lattice_ties_in_batch():
    grid = np.stack(np.meshgrid(np.arange(4.0), np.arange(4.0), np.arange(4.0), indexing="ij"), -1).reshape(-1, 3)
    index = build(grid)
    anchors = np.arange(len(grid))
    batch = knn_batch(index, grid, 6, exclude=anchors)
    for a in anchors:
        np.testing.assert_array_equal(batch[a], brute_knn(grid, grid[a], 6, exclude=a))


@pytest.mark.parametrize("k", [1, 5, 10])
def test_matches_brute_force(rng, k):
    positions = rng.normal(size=(200, 3))
    index = build(positions)
    queries = rng.normal(size=(50, 3))
    for q in queries:
        np.testing.assert_array_equal(knn(index, q, k), brute_knn(positions, q, k))
    np.testing.assert_array_equal(
        knn_batch(index, queries, k), np.stack([brute_knn(positions, q, k) for q in queries])
    )


def test_thousand_points_self_queries(rng):
    positions = rng.uniform(size=(1000, 3))
    index = build(positions)
    anchors = rng.choice(1000, size=100, replace=False)
    batch = knn_batch(index, positions[anchors], 5, exclude=anchors)
    for row, a in zip(batch, anchors):
        np.testing.assert_array_equal(row, brute_knn(positions, positions[a], 5, exclude=a))


def test_k_too_large():
    index = build(np.zeros((3, 3)) + np.arange(3.0)[:, None])
    with pytest.raises(KTooLarge):
        knn(index, np.zeros(3), 3, exclude=0)
    with pytest.raises(KTooLarge):
        knn_batch(index, np.zeros((1, 3)), 4)


def test_snapshot_is_immutable(rng):
    positions = rng.normal(size=(20, 3))
    index = build(positions, generation=3)
    positions += 100.0
    assert index.generation == 3
    assert np.all(np.abs(index.positions) < 50.0)
    with pytest.raises(ValueError):
        index.positions[0, 0] = 1.0
