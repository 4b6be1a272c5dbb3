import numpy as np
import pytest

from semsplat.cloud.gaussians import ATTRIBUTES, GaussianCloud
from semsplat.exceptions import ShapeMismatch
from semsplat.rasterizer import ALPHA_MAX, render, render_backward
from tests.factories import gradcheck_scenes, make_camera, make_cloud, scattered_cloud
from tests.gradcheck import assert_grad_close, numeric_grad

SCENES = gradcheck_scenes(seed=2024, count=20)


def _weighted_loss(cloud, camera, w_color, w_feature, tile_size=4):
    out = render(cloud, camera, tile_size=tile_size, min_transmittance=0.0)
    return float(np.sum(out.color_image * w_color) + np.sum(out.feature_map * w_feature))


@pytest.fixture
def adjoints(rng, camera):
    return (
        rng.normal(size=(camera.height, camera.width, 3)),
        rng.normal(size=(camera.height, camera.width, 4)),
    )


@pytest.mark.parametrize("attribute", ATTRIBUTES)
def test_gradients_match_finite_differences(attribute):
    rng = np.random.default_rng(ATTRIBUTES.index(attribute))
    for cloud, camera, tile_size in SCENES:
        w_color = rng.normal(size=(camera.height, camera.width, 3))
        w_feature = rng.normal(size=(camera.height, camera.width, 4))
        out = render(cloud, camera, tile_size=tile_size, min_transmittance=0.0)
        grads = render_backward(cloud, camera, out, w_color, w_feature)

        numeric = numeric_grad(
            lambda: _weighted_loss(cloud, camera, w_color, w_feature, tile_size), getattr(cloud, attribute),
        )
        assert_grad_close(getattr(grads, attribute), numeric)


def test_gradient_scenes_cover_clamp_and_partial_footprints():
    sizes, counts = set(), set()
    for cloud, camera, tile_size in SCENES:
        out = render(cloud, camera, tile_size=tile_size, min_transmittance=0.0)
        raw = np.concatenate([s.raw_alpha for s in out.states if s is not None])
        assert raw.max() >= ALPHA_MAX
        # the border splat covers fewer pixels than its full footprint would
        assert out.splats.means2d[out.splats.source_index == 1][0, 0] <= 0.0
        sizes.add((camera.height, camera.width))
        counts.add(cloud.num_points)
    assert len(SCENES) == 20
    assert len(sizes) > 1 and len(counts) > 1
    assert max(counts) <= 20 and max(max(s) for s in sizes) <= 8


def test_higher_sh_degree(rng, camera):
    cloud = make_cloud(rng, n=3, sh_degree=3)
    w_color = rng.normal(size=(camera.height, camera.width, 3))
    w_feature = np.zeros((camera.height, camera.width, 4))
    out = render(cloud, camera, min_transmittance=0.0)
    grads = render_backward(cloud, camera, out, w_color, w_feature)
    for name in ("sh_coeffs", "positions"):
        numeric = numeric_grad(lambda: _weighted_loss(cloud, camera, w_color, w_feature), getattr(cloud, name))
        assert_grad_close(getattr(grads, name), numeric)


def test_culled_points_get_zero_gradient(rng, camera, adjoints):
    visible = make_cloud(rng, n=3)
    hidden = make_cloud(rng, n=2)
    hidden.positions[:, 2] = -5.0
    cloud = GaussianCloud.concat([visible, hidden])
    out = render(cloud, camera)
    grads = render_backward(cloud, camera, out, *adjoints)
    for _, arr in grads.arrays():
        assert not arr[3:].any()
        assert arr[:3].any()
    assert not grads.means2d[3:].any()


def test_thread_count_does_not_change_gradients(rng):
    camera = make_camera(width=24, height=20, focal=30.0)
    cloud = scattered_cloud(rng, n=40, width=24, height=20, focal=30.0)
    out = render(cloud, camera, tile_size=8)
    dC = rng.normal(size=out.color_image.shape)
    dF = rng.normal(size=out.feature_map.shape)
    single = render_backward(cloud, camera, out, dC, dF, threads=1)
    multi = render_backward(cloud, camera, out, dC, dF, threads=4)
    for (name, a), (_, b) in zip(single.arrays(), multi.arrays()):
        np.testing.assert_array_equal(a, b, err_msg=name)
    assert single.is_finite()


def test_adjoint_shape_checked(cloud, camera):
    out = render(cloud, camera)
    with pytest.raises(ShapeMismatch):
        render_backward(cloud, camera, out, np.zeros((camera.height, camera.width, 3)), np.zeros((2, 2, 4)))


def test_output_from_another_cloud_rejected(rng, cloud, camera, adjoints):
    out = render(cloud, camera)
    with pytest.raises(ShapeMismatch):
        render_backward(make_cloud(rng, n=7), camera, out, *adjoints)


def test_replayed_blending_matches_kept_state(rng):
    camera = make_camera(width=24, height=20, focal=30.0)
    cloud = scattered_cloud(rng, n=40, width=24, height=20, focal=30.0)
    out = render(cloud, camera, tile_size=8)
    dC = rng.normal(size=out.color_image.shape)
    dF = rng.normal(size=out.feature_map.shape)
    kept = render_backward(cloud, camera, out, dC, dF)
    out.states = []
    replayed = render_backward(cloud, camera, out, dC, dF)
    for (name, a), (_, b) in zip(kept.arrays(), replayed.arrays()):
        np.testing.assert_array_equal(a, b, err_msg=name)
