from __future__ import annotations

import math

import numpy as np
import pytest

from memvote.anchors import IGNORE, AnchorGrid, BBox, assign_labels, decode, encode, iou
from memvote.config import AnchorConfig
from memvote.exception import ContractViolation


class TestBBox:
    def test_corner_conversion(self) -> None:
        box = BBox.from_corner(10.0, 20.0, 30.0, 40.0)

        assert (box.cx, box.cy, box.w, box.h) == (25.0, 40.0, 30.0, 40.0)
        assert box.to_corner() == (10.0, 20.0, 30.0, 40.0)

    @pytest.mark.parametrize('values', [(0, 0, 0, 4), (0, 0, 4, -1), (0, math.nan, 4, 4), (0, 0, math.inf, 4)])
    def test_invalid_boxes(self, values: tuple[float, ...]) -> None:
        box = BBox(*values)

        assert not box.is_valid()
        with pytest.raises(ContractViolation):
            box.validate()


class TestIoU:
    def test_identical_boxes(self) -> None:
        box = BBox(5, 5, 4, 6)
        assert iou(box, box) == pytest.approx(1.0)

    def test_half_overlap(self) -> None:
        assert iou(BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)) == pytest.approx(2 / 6)

    def test_disjoint_boxes(self) -> None:
        assert iou(BBox(0, 0, 2, 2), BBox(10, 10, 2, 2)) == 0.0

    def test_degenerate_box_is_rejected(self) -> None:
        with pytest.raises(ContractViolation):
            iou(BBox(0, 0, 0, 2), BBox(0, 0, 2, 2))


class TestEncoding:
    def test_encode_known_values(self) -> None:
        anchor = BBox(10, 10, 20, 10)
        gt = BBox(15, 12, 40, 5)

        np.testing.assert_allclose(encode(gt, anchor), [0.25, 0.2, math.log(2), math.log(0.5)])

    def test_decode_inverts_encode(self) -> None:
        anchor = BBox(31.5, 12.25, 17.0, 9.0)
        gt = BBox(40.0, 3.0, 5.5, 21.0)
        decoded = decode(encode(gt, anchor), anchor)

        np.testing.assert_allclose(decoded.as_array(), gt.as_array(), rtol=1e-6)

    def test_zero_displacement_is_the_anchor(self) -> None:
        anchor = BBox(8, 8, 16, 16)
        assert decode([0, 0, 0, 0], anchor) == anchor

    def test_decode_inverts_encode_on_random_pairs(self) -> None:
        rng = np.random.default_rng(11)

        for _ in range(1000):
            anchor = BBox(*rng.uniform(-50, 300, 2), *rng.uniform(1, 200, 2))
            gt = BBox(*rng.uniform(-50, 300, 2), *rng.uniform(1, 200, 2))
            decoded = decode(encode(gt, anchor), anchor)

            np.testing.assert_allclose(decoded.as_array(), gt.as_array(), rtol=1e-6, atol=1e-6)


class TestAnchorGrid:
    def test_layout(self) -> None:
        grid = AnchorGrid((0.5, 1.0, 2.0), scale=16.0, size=4, stride=16)

        assert grid.boxes.shape == (3, 4, 4, 4)
        assert grid.count == 3
        # Anchor 2 at cell (y=1, x=3).
        np.testing.assert_allclose(grid.box(2, 1, 3).as_array()[:2], [56.0, 24.0])
        assert grid.unravel(2 * 16 + 1 * 4 + 3) == (2, 1, 3)

    def test_equal_area_and_ratio(self) -> None:
        grid = AnchorGrid((1 / 3, 1.0, 3.0), scale=12.0, size=2)

        for index, ratio in enumerate(grid.ratios):
            box = grid.box(index, 0, 0)
            assert box.w * box.h == pytest.approx(144.0)
            assert box.h / box.w == pytest.approx(ratio)

    def test_default_scale_is_a_quarter_of_the_search_size(self) -> None:
        grid = AnchorGrid.from_config(AnchorConfig(), search_size=128)

        assert grid.scale == 32.0
        assert grid.size == 8

    def test_boxes_are_read_only(self) -> None:
        grid = AnchorGrid((1.0,), scale=16.0, size=2)

        with pytest.raises(ValueError):
            grid.boxes[0, 0, 0, 0] = 1.0


class TestAssignLabels:
    def setup_method(self) -> None:
        self.grid = AnchorGrid((0.5, 1.0, 2.0), scale=16.0, size=4, stride=16)

    def test_matching_box_is_positive(self) -> None:
        labels = assign_labels(BBox(24, 40, 16, 16), self.grid, 0.6, 0.3)

        assert labels.center[1, 2, 1] == 1
        assert labels.center.shape == (3, 4, 4)
        np.testing.assert_allclose(labels.regression[4:8, 2, 1], np.zeros(4), atol=1e-12)

    def test_values_and_ignore_band(self) -> None:
        labels = assign_labels(BBox(30, 40, 16, 16), self.grid, 0.6, 0.3)

        assert set(np.unique(labels.center)) <= {0, 1, IGNORE}
        assert np.any(labels.center == 0)
        assert np.any(labels.positives)

    def test_best_anchor_is_forced_positive(self) -> None:
        labels = assign_labels(BBox(32, 32, 5, 5), self.grid, 0.6, 0.3)

        assert labels.positives.sum() == 1
        # All four cells around the center tie; the first in flat order wins.
        assert labels.center[1, 1, 1] == 1

    def test_regression_targets_only_at_positives(self) -> None:
        gt = BBox(30, 34, 20, 14)
        labels = assign_labels(gt, self.grid, 0.3, 0.1)

        for anchor, y, x in zip(*np.nonzero(labels.center != 1)):
            np.testing.assert_array_equal(labels.regression[4 * anchor:4 * anchor + 4, y, x], np.zeros(4))

        for anchor, y, x in zip(*np.nonzero(labels.positives)):
            expected = encode(gt, self.grid.box(anchor, y, x))
            np.testing.assert_allclose(labels.regression[4 * anchor:4 * anchor + 4, y, x], expected)

    def test_invalid_thresholds(self) -> None:
        with pytest.raises(ContractViolation):
            assign_labels(BBox(30, 30, 10, 10), self.grid, 0.3, 0.6)

    def test_matches_a_per_anchor_loop_on_random_boxes(self) -> None:
        rng = np.random.default_rng(5)
        positive, negative = 0.6, 0.3

        for _ in range(1000):
            gt = BBox(*rng.uniform(0, 64, 2), *rng.uniform(2, 48, 2))
            labels = assign_labels(gt, self.grid, positive, negative)

            overlaps = {index: _overlap(self.grid.box(*index), gt) for index in np.ndindex(3, 4, 4)}
            expected = {
                index: 1 if value >= positive else 0 if value <= negative else IGNORE
                for index, value in overlaps.items()
            }
            if 1 not in expected.values():
                # dict order is flat order, so max keeps the first of the ties.
                expected[max(overlaps, key=overlaps.__getitem__)] = 1

            for (anchor, y, x), label in expected.items():
                assert labels.center[anchor, y, x] == label

                box = self.grid.box(anchor, y, x)
                target = [
                    (gt.cx - box.cx) / box.w,
                    (gt.cy - box.cy) / box.h,
                    math.log(gt.w / box.w),
                    math.log(gt.h / box.h),
                ] if label == 1 else [0.0] * 4
                np.testing.assert_allclose(labels.regression[4 * anchor:4 * anchor + 4, y, x], target,
                                           rtol=1e-12, atol=1e-12)


def _overlap(a: BBox, b: BBox) -> float:
    left = max(a.cx - a.w / 2, b.cx - b.w / 2)
    right = min(a.cx + a.w / 2, b.cx + b.w / 2)
    top = max(a.cy - a.h / 2, b.cy - b.h / 2)
    bottom = min(a.cy + a.h / 2, b.cy + b.h / 2)

    intersection = max(right - left, 0.0) * max(bottom - top, 0.0)
    union = a.w * a.h + b.w * b.h - intersection

    return intersection / union if union > 0 else 0.0
