import math

import numpy as np
import pytest

from semsplat.exceptions import (
    ImageTooSmall,
    InvalidSampleCount,
    LabelOutOfRange,
    NonFiniteLoss,
    ShapeMismatch,
    TooFewPoints,
)
from semsplat.losses import (
    LossParts,
    LossWeights,
    agg2d_loss,
    agg3d_loss,
    ce_loss,
    dssim_loss,
    gaussian_window,
    kl_pairs,
    l1_loss,
    pixel_neighbors,
    sample_indices,
    softmax,
    ssim_map,
    total_loss,
)
from semsplat.spatial_index import build
from tests.gradcheck import assert_grad_close, numeric_grad

GRADCHECK_INSTANCES = 20
NONNEGATIVE_INPUTS = 1000


def _kl(p, q):
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))


def _brute_ssim(x, y):
    """Windowed SSIM of single-channel images, zero padded, one pixel at a time"""
    w = gaussian_window()
    r = len(w) // 2
    h, wd = x.shape
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    out = np.zeros_like(x)
    for row in range(h):
        for col in range(wd):
            mx = my = exx = eyy = exy = 0.0
            for i in range(len(w)):
                for j in range(len(w)):
                    rr, cc = row + i - r, col + j - r
                    if 0 <= rr < h and 0 <= cc < wd:
                        t = w[i] * w[j]
                        mx += t * x[rr, cc]
                        my += t * y[rr, cc]
                        exx += t * x[rr, cc] ** 2
                        eyy += t * y[rr, cc] ** 2
                        exy += t * x[rr, cc] * y[rr, cc]
            sxx, syy, sxy = exx - mx * mx, eyy - my * my, exy - mx * my
            out[row, col] = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
    return out


class TestL1:

    def test_identical(self, rng):
        img = rng.uniform(size=(4, 5, 3))
        result = l1_loss(img, img.copy())
        assert result.value == 0.0
        assert not result.grad.any()

    def test_constant_difference(self):
        assert l1_loss(np.full((3, 3, 3), 0.75), np.full((3, 3, 3), 0.25)).value == pytest.approx(0.5)

    def test_random_pairs(self, rng):
        for _ in range(GRADCHECK_INSTANCES):
            shape = (*(int(s) for s in rng.integers(1, 9, size=2)), 3)
            a = rng.uniform(size=shape)
            # keep every difference away from the kink of |a - b|
            b = a + rng.choice([-1.0, 1.0], size=shape) * rng.uniform(1e-3, 0.5, size=shape)
            result = l1_loss(a, b)
            assert result.value == pytest.approx(np.abs(a - b).sum() / a.size)
            assert_grad_close(result.grad, numeric_grad(lambda: l1_loss(a, b).value, a))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            l1_loss(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))


class TestDssim:

    def test_identical(self, rng):
        img = rng.uniform(size=(12, 13, 3))
        assert dssim_loss(img, img.copy()).value == pytest.approx(0.0, abs=1e-12)

    def test_constant_pair_matches_windowed_oracle(self):
        x = np.full((13, 12, 1), 0.9)
        y = np.full((13, 12, 1), 0.1)
        expected = 0.5 * (1.0 - _brute_ssim(x[..., 0], y[..., 0]).mean())
        assert dssim_loss(x, y).value == pytest.approx(expected, abs=1e-8)

    def test_random_pair_matches_windowed_oracle(self, rng):
        x, y = rng.uniform(size=(11, 12, 1)), rng.uniform(size=(11, 12, 1))
        expected = 0.5 * (1.0 - _brute_ssim(x[..., 0], y[..., 0]).mean())
        assert dssim_loss(x, y).value == pytest.approx(expected, abs=1e-8)

    def test_ssim_map_matches_windowed_oracle(self, rng):
        x, y = rng.uniform(size=(12, 11, 2)), rng.uniform(size=(12, 11, 2))
        ssim = ssim_map(x, y)
        assert ssim.shape == x.shape
        np.testing.assert_allclose(ssim[..., 1], _brute_ssim(x[..., 1], y[..., 1]), atol=1e-9)
        np.testing.assert_allclose(ssim_map(x, x), 1.0, atol=1e-9)

    def test_gradient(self, rng):
        # the 11-tap window sets the smallest valid image
        for _ in range(GRADCHECK_INSTANCES):
            shape = (*(int(s) for s in rng.integers(11, 14, size=2)), int(rng.integers(1, 4)))
            x, y = rng.uniform(size=shape), rng.uniform(size=shape)
            result = dssim_loss(x, y)
            assert_grad_close(result.grad, numeric_grad(lambda: dssim_loss(x, y).value, x))

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            dssim_loss(np.zeros((10, 20, 3)), np.zeros((10, 20, 3)))


class TestCrossEntropy:

    def test_saturated_correct_prediction(self):
        labels = np.array([[0, 2], [1, 1]])
        logits = np.zeros((2, 2, 3))
        for (r, c), y in np.ndenumerate(labels):
            logits[r, c, y] = 1e4
        assert ce_loss(logits, labels).value < 1e-3

    def test_uniform_logits(self):
        assert ce_loss(np.zeros((3, 3, 4)), np.ones((3, 3), dtype=np.uint8)).value == pytest.approx(math.log(4))

    def test_empty_mask(self, rng):
        result = ce_loss(rng.normal(size=(3, 3, 4)), np.zeros((3, 3), dtype=np.uint8), mask=np.zeros((3, 3)))
        assert result.value == 0.0
        assert not result.grad.any()

    def test_ignore_value_skipped(self, rng):
        logits = rng.normal(size=(2, 2, 3))
        labels = np.array([[0, 255], [255, 2]], dtype=np.uint8)
        result = ce_loss(logits, labels)
        logp = logits - np.log(np.exp(logits).sum(axis=-1, keepdims=True))
        assert result.value == pytest.approx(-(logp[0, 0, 0] + logp[1, 1, 2]) / 2)
        assert not result.grad[0, 1].any()

    def test_masked_gradient(self, rng):
        for _ in range(GRADCHECK_INSTANCES):
            h, w = (int(s) for s in rng.integers(1, 9, size=2))
            classes = int(rng.integers(2, 7))
            logits = rng.normal(scale=2.0, size=(h, w, classes))
            labels = rng.integers(0, classes, size=(h, w))
            mask = rng.integers(0, 2, size=(h, w))
            mask[0, 0] = 1
            result = ce_loss(logits, labels, mask)
            assert_grad_close(result.grad, numeric_grad(lambda: ce_loss(logits, labels, mask).value, logits))
            assert not result.grad[mask == 0].any()

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            ce_loss(np.zeros((2, 2, 3)), np.array([[0, 1], [3, 0]]))

    def test_mask_shape(self):
        with pytest.raises(ShapeMismatch):
            ce_loss(np.zeros((2, 2, 3)), np.zeros((2, 2), dtype=int), mask=np.ones((3, 2)))


class TestKlPairs:

    def test_hand_value(self):
        anchors = np.array([[0.0, math.log(3.0)]])
        neighbours = np.array([[[0.0, 0.0], [math.log(3.0), 0.0]]])
        value, _, _ = kl_pairs(anchors, neighbours)
        expected = (_kl([0.25, 0.75], [0.5, 0.5]) + _kl([0.25, 0.75], [0.75, 0.25])) / 2
        assert value == pytest.approx(expected, abs=1e-12)

    def test_gradients(self, rng):
        for _ in range(GRADCHECK_INSTANCES):
            m, k, c = (int(s) for s in rng.integers(1, 7, size=3))
            anchors = rng.normal(size=(m, c + 1))
            neighbours = rng.normal(size=(m, k, c + 1))
            _, d_a, d_n = kl_pairs(anchors, neighbours)
            assert_grad_close(d_a, numeric_grad(lambda: kl_pairs(anchors, neighbours)[0], anchors))
            assert_grad_close(d_n, numeric_grad(lambda: kl_pairs(anchors, neighbours)[0], neighbours))


class TestPixelNeighbors:

    def test_corner(self):
        assert pixel_neighbors(3, 3, np.array([0]), 2).tolist() == [[1, 3]]

    def test_centre_ties_row_major(self):
        assert pixel_neighbors(3, 3, np.array([4]), 4).tolist() == [[1, 3, 5, 7]]
        assert pixel_neighbors(3, 3, np.array([4]), 5).tolist() == [[1, 3, 5, 7, 0]]

    def test_never_returns_anchor(self, rng):
        anchors = rng.choice(20, size=6, replace=False)
        neighbours = pixel_neighbors(4, 5, anchors, 8)
        assert neighbours.shape == (6, 8)
        for a, row in zip(anchors, neighbours):
            assert a not in row
            assert len(set(row.tolist())) == 8
            assert np.all((row >= 0) & (row < 20))


class TestAgg2d:

    def test_constant_map(self):
        result = agg2d_loss(np.full((5, 5, 3), 0.7), m=4, k=4, seed=0)
        assert result.value == 0.0
        assert not result.grad.any()

    def test_nonnegative(self, rng):
        for seed in range(NONNEGATIVE_INPUTS):
            h, w = (int(s) for s in rng.integers(2, 9, size=2))
            k = int(rng.integers(1, min(8, h * w - 1) + 1))
            m = int(rng.integers(1, h * w // (k + 1) + 1))
            fmap = rng.normal(scale=rng.uniform(0.1, 5.0), size=(h, w, int(rng.integers(2, 9))))
            assert agg2d_loss(fmap, m=m, k=k, seed=seed).value >= 0.0

    def test_three_by_three_fixture(self):
        fmap = np.arange(18, dtype=np.float64).reshape(3, 3, 2) * np.array([0.3, -0.2])
        seed = 11
        anchor = int(sample_indices(9, 1, seed)[0])
        r, c = divmod(anchor, 3)
        cells = sorted(
            ((rr - r) ** 2 + (cc - c) ** 2, rr * 3 + cc)
            for rr in range(3) for cc in range(3) if (rr, cc) != (r, c)
        )
        flat = fmap.reshape(9, 2)
        p = softmax(flat[anchor])
        expected = sum(_kl(p, softmax(flat[j])) for _, j in cells[:2]) / 2
        assert agg2d_loss(fmap, m=1, k=2, seed=seed).value == pytest.approx(expected, abs=1e-9)

    def test_gradient(self, rng):
        for seed in range(GRADCHECK_INSTANCES):
            h, w = (int(s) for s in rng.integers(2, 9, size=2))
            k = int(rng.integers(1, min(8, h * w - 1) + 1))
            m = int(rng.integers(1, h * w // (k + 1) + 1))
            fmap = rng.normal(size=(h, w, int(rng.integers(2, 6))))
            result = agg2d_loss(fmap, m=m, k=k, seed=seed)
            assert_grad_close(result.grad, numeric_grad(lambda: agg2d_loss(fmap, m, k, seed).value, fmap))

    def test_channel_shift_invariance(self, rng):
        fmap = rng.normal(size=(4, 4, 3))
        shifted = fmap + rng.normal(size=(4, 4, 1))
        assert agg2d_loss(shifted, 4, 2, 9).value == pytest.approx(agg2d_loss(fmap, 4, 2, 9).value, abs=1e-12)

    def test_seeded(self, rng):
        fmap = rng.normal(size=(6, 6, 3))
        assert agg2d_loss(fmap, 5, 3, 2).value == agg2d_loss(fmap, 5, 3, 2).value

    @pytest.mark.parametrize("m,k", [(0, 2), (2, 0), (4, 3)])
    def test_invalid_sample_count(self, m, k):
        with pytest.raises(InvalidSampleCount):
            agg2d_loss(np.zeros((3, 5, 2)), m=m, k=k, seed=0)


class TestAgg3d:

    @pytest.fixture
    def six_points(self):
        positions = np.array([
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 2.0, 0.0],
            [0.0, 0.0, 3.0],
            [4.0, 4.0, 0.0],
            [0.5, 0.5, 0.5],
        ])
        features = np.array([
            [0.1, 0.2, 0.3],
            [1.0, 0.0, -1.0],
            [0.0, 0.5, 0.0],
            [-0.3, 0.3, 0.9],
            [2.0, 1.0, 0.0],
            [0.0, 0.0, 0.0],
        ])
        return positions, features

    def test_six_point_fixture(self, six_points):
        positions, features = six_points
        seed = 4
        anchor = int(sample_indices(6, 1, seed)[0])
        d2 = [(float(np.sum((positions[j] - positions[anchor]) ** 2)), j) for j in range(6) if j != anchor]
        nearest = [j for _, j in sorted(d2)[:2]]
        p = softmax(features[anchor])
        expected = sum(_kl(p, softmax(features[j])) for j in nearest) / 2
        result = agg3d_loss(features, build(positions), m=1, k=2, seed=seed)
        assert result.value == pytest.approx(expected, abs=1e-9)

    def test_identical_features(self, six_points):
        positions, _ = six_points
        result = agg3d_loss(np.ones((6, 4)), build(positions), m=6, k=5, seed=0)
        assert result.value == 0.0

    def test_nonnegative(self, rng):
        for seed in range(NONNEGATIVE_INPUTS):
            n = int(rng.integers(2, 41))
            k = int(rng.integers(1, min(8, n - 1) + 1))
            index = build(rng.normal(size=(n, 3)))
            features = rng.normal(scale=rng.uniform(0.1, 5.0), size=(n, int(rng.integers(2, 9))))
            assert agg3d_loss(features, index, m=int(rng.integers(1, 2 * n)), k=k, seed=seed).value >= 0.0

    def test_gradient(self, rng):
        for seed in range(GRADCHECK_INSTANCES):
            n = int(rng.integers(3, 21))
            k = int(rng.integers(1, min(5, n - 1) + 1))
            m = int(rng.integers(1, n + 1))
            index = build(rng.normal(size=(n, 3)))
            features = rng.normal(size=(n, int(rng.integers(2, 6))))
            result = agg3d_loss(features, index, m=m, k=k, seed=seed)
            assert_grad_close(result.grad, numeric_grad(lambda: agg3d_loss(features, index, m, k, seed).value, features))

    def test_m_larger_than_cloud(self, six_points):
        positions, features = six_points
        assert agg3d_loss(features, build(positions), m=100, k=2, seed=0).value > 0.0

    def test_too_few_points(self, six_points):
        positions, features = six_points
        with pytest.raises(TooFewPoints):
            agg3d_loss(features, build(positions), m=1, k=6, seed=0)

    def test_stale_index(self, six_points):
        positions, features = six_points
        with pytest.raises(ShapeMismatch):
            agg3d_loss(features[:5], build(positions), m=1, k=2, seed=0)


class TestTotalLoss:

    def test_zero(self):
        assert total_loss(LossParts(), LossWeights()).total == 0.0

    def test_weighted(self):
        report = total_loss(LossParts(1.0, 1.0, 1.0, 1.0, 1.0), LossWeights(a=0.5, b=0.1))
        assert report.total == pytest.approx(3.6, abs=1e-9)
        assert report.as_row(7) == {
            "step": 7, "l1": 1.0, "dssim": 1.0, "ce": 1.0, "agg2d": 1.0, "agg3d": 1.0, "total": report.total,
        }

    def test_aggregation_switched_off(self):
        weights = LossWeights(a=0.0, b=0.0)
        assert total_loss(LossParts(1.0, 2.0, 3.0, 9.0, 9.0), weights).total == 6.0
        assert total_loss(LossParts(1.0, 2.0, 3.0, 0.0, 0.0), weights).total == 6.0

    def test_non_finite(self):
        with pytest.raises(NonFiniteLoss) as err:
            total_loss(LossParts(l1=float("nan")), LossWeights(), step=3)
        assert err.value.step == 3
