import numpy as np
import pytest

from semsplat.exceptions import ConfigError, InvalidInstanceMasks, MissingReferenceLabel, ParseError, ShapeMismatch
from semsplat.pseudolabel import (
    UNASSIGNED,
    InstanceMaskSet,
    assign_pseudo_class,
    build_pseudo_labels,
    choose_reference_view,
    derive_boundary_mask,
    load_instance_masks,
    load_pseudo_labels,
    read_manifest,
    write_manifest,
    write_pseudo_labels,
)
from semsplat.utils.images import write_index_map

U = UNASSIGNED


@pytest.fixture
def three_views():
    """Reference view "a" with ground truth, two more views sharing instance ids"""
    a = np.zeros((6, 6), dtype=np.uint8)
    a[2:4, 2:4] = 1
    a[0, 0:3] = 2
    a[4:6, 5] = 3
    gt = np.zeros((6, 6), dtype=np.uint8)
    gt[2:4, 2:4] = 2
    gt[0, 0:3] = [1, 1, 3]
    gt[4:6, 5] = 255

    b = np.zeros((6, 6), dtype=np.uint8)
    b[0:2, 0:2] = 1
    b[3:6, 3] = 2

    c = np.zeros((6, 6), dtype=np.uint8)
    c[2, 2] = 3
    c[5, 5] = 2
    return InstanceMaskSet({"a": a, "b": b, "c": c}), gt


class TestDeriveBoundaryMask:

    def test_interior_instance(self):
        inst = np.zeros((10, 10), dtype=np.uint8)
        inst[4:6, 4:6] = 1
        flagged, mask = derive_boundary_mask(inst, 0.1)
        assert flagged == frozenset()
        assert not mask.any()

    def test_touching_first_row(self):
        inst = np.zeros((10, 10), dtype=np.uint8)
        inst[0, 4] = 1
        inst[1:5, 4] = 1
        flagged, mask = derive_boundary_mask(inst, 0.1)
        assert flagged == {1}
        np.testing.assert_array_equal(mask, (inst == 1).astype(np.uint8))

    def test_hand_enumerated_mask(self):
        inst = np.zeros((8, 8), dtype=np.uint8)
        inst[3:5, 3:5] = 1
        inst[1:3, 4:7] = 2
        flagged, mask = derive_boundary_mask(inst, 0.25)
        assert flagged == {2}
        expected = {(r, c) for r in (1, 2) for c in (4, 5, 6)}
        assert {tuple(p) for p in np.argwhere(mask == 1)} == expected

    def test_monotone_in_margin(self, rng):
        inst = rng.integers(0, 6, size=(20, 20)).astype(np.uint8)
        inst[:] = 0
        for i in range(1, 6):
            r, c = rng.integers(0, 17, size=2)
            inst[r:r + 3, c:c + 3] = i
        previous = frozenset()
        for margin in (0.05, 0.1, 0.2, 0.3, 0.45):
            flagged, _ = derive_boundary_mask(inst, margin)
            assert previous <= flagged
            previous = flagged

    @pytest.mark.parametrize("margin", [0.0, 0.5, 0.7])
    def test_margin_range(self, margin):
        with pytest.raises(ConfigError):
            derive_boundary_mask(np.zeros((4, 4), dtype=np.uint8), margin)


class TestAssignPseudoClass:

    def test_unanimous(self):
        inst = np.array([[1, 1], [0, 0]])
        gt = np.array([[3, 3], [0, 0]])
        assert assign_pseudo_class(inst, gt) == {1: 3}

    def test_majority(self):
        inst = np.ones((2, 5), dtype=np.uint8)
        gt = np.array([[1, 1, 1, 1, 1], [1, 2, 2, 2, 2]])
        assert assign_pseudo_class(inst, gt) == {1: 1}

    def test_tie_to_smaller_class(self):
        inst = np.ones((2, 5), dtype=np.uint8)
        gt = np.array([[4, 4, 4, 4, 4], [2, 2, 2, 2, 2]])
        assert assign_pseudo_class(inst, gt) == {1: 2}

    def test_no_valid_overlap(self):
        inst = np.array([[1, 2], [2, 2]])
        gt = np.array([[255, 1], [1, 0]])
        assert assign_pseudo_class(inst, gt) == {1: U, 2: 1}

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            assign_pseudo_class(np.zeros((2, 2)), np.zeros((2, 3)))


class TestBuildPseudoLabels:

    def test_three_view_fixture(self, three_views):
        masks, gt = three_views
        pseudo = build_pseudo_labels(masks, "a", gt, margin_fraction=0.2)
        assert pseudo.classes == {1: 2, 2: 1, 3: U}
        assert pseudo.flagged == {2}
        assert pseudo.reference_view == "a"

        expected_a = np.full((6, 6), U, dtype=np.uint8)
        expected_a[2:4, 2:4] = 2
        expected_a[0, 0:3] = 1
        np.testing.assert_array_equal(pseudo.labels["a"], expected_a)
        np.testing.assert_array_equal(pseudo.boundary["a"], (masks["a"] == 2).astype(np.uint8))

        expected_b = np.full((6, 6), U, dtype=np.uint8)
        expected_b[0:2, 0:2] = 2
        expected_b[3:6, 3] = 1
        np.testing.assert_array_equal(pseudo.labels["b"], expected_b)
        np.testing.assert_array_equal(pseudo.boundary["b"], (masks["b"] == 2).astype(np.uint8))

        expected_c = np.full((6, 6), U, dtype=np.uint8)
        expected_c[5, 5] = 1
        np.testing.assert_array_equal(pseudo.labels["c"], expected_c)
        expected_boundary_c = np.zeros((6, 6), dtype=np.uint8)
        expected_boundary_c[5, 5] = 1
        np.testing.assert_array_equal(pseudo.boundary["c"], expected_boundary_c)

    def test_boundary_pixels_carry_a_class(self, three_views):
        masks, gt = three_views
        pseudo = build_pseudo_labels(masks, "a", gt, margin_fraction=0.45)
        for view_id in pseudo.view_ids():
            assert np.all(pseudo.labels[view_id][pseudo.boundary[view_id] == 1] != U)

    def test_missing_reference_label(self, three_views):
        masks, _ = three_views
        with pytest.raises(MissingReferenceLabel):
            build_pseudo_labels(masks, "b", None)

    def test_unknown_reference_view(self, three_views):
        masks, gt = three_views
        with pytest.raises(InvalidInstanceMasks):
            build_pseudo_labels(masks, "z", gt)


class TestInstanceMaskSet:

    def test_non_contiguous_ids(self):
        with pytest.raises(InvalidInstanceMasks):
            InstanceMaskSet({"a": np.array([[0, 1], [3, 3]], dtype=np.uint8)})

    def test_shapes_must_agree(self):
        with pytest.raises(InvalidInstanceMasks):
            InstanceMaskSet({"a": np.zeros((2, 2), np.uint8), "b": np.zeros((2, 3), np.uint8)})

    def test_ids_span_views(self, three_views):
        masks, _ = three_views
        assert masks.num_instances == 3
        assert masks.shape == (6, 6)


class TestChooseReferenceView:

    def test_explicit(self):
        assert choose_reference_view(["a", "b"], "b") == "b"

    def test_random_is_seeded(self):
        views = ["v3", "v1", "v2"]
        picks = {choose_reference_view(views, seed=s) for s in range(20)}
        assert picks <= set(views)
        assert choose_reference_view(views, seed=4) == choose_reference_view(list(reversed(views)), seed=4)

    def test_no_labeled_views(self):
        with pytest.raises(MissingReferenceLabel):
            choose_reference_view([])


class TestFiles:

    def test_round_trip(self, tmp_path, three_views):
        masks, gt = three_views
        for view_id in masks.view_ids():
            write_index_map(tmp_path / "instances" / f"{view_id}.png", masks[view_id])
        write_manifest(tmp_path / "instances" / "manifest.csv", {v: f"{v}.png" for v in masks.view_ids()})

        loaded = load_instance_masks(tmp_path / "instances")
        for view_id in masks.view_ids():
            np.testing.assert_array_equal(loaded[view_id], masks[view_id])

        pseudo = build_pseudo_labels(loaded, "a", gt, margin_fraction=0.2)
        write_pseudo_labels(tmp_path / "pseudo", pseudo)
        first = {p.name: p.read_bytes() for p in (tmp_path / "pseudo").iterdir()}
        write_pseudo_labels(tmp_path / "pseudo", pseudo)
        assert {p.name: p.read_bytes() for p in (tmp_path / "pseudo").iterdir()} == first

        restored = load_pseudo_labels(tmp_path / "pseudo")
        assert sorted(restored.view_ids()) == ["a", "b", "c"]
        for view_id in pseudo.view_ids():
            np.testing.assert_array_equal(restored.labels[view_id], pseudo.labels[view_id])
            np.testing.assert_array_equal(restored.boundary[view_id], pseudo.boundary[view_id])

    def test_duplicate_view_in_manifest(self, tmp_path):
        (tmp_path / "manifest.csv").write_text("view_id,file\na,a.png\nb,b.png\na,c.png\n")
        with pytest.raises(ParseError) as err:
            read_manifest(tmp_path / "manifest.csv")
        assert err.value.line == 4
