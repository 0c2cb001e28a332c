from __future__ import annotations

import math

import numpy as np
import pytest

from memvote.anchors import IGNORE, LabelMaps
from memvote.exception import ContractViolation
from memvote.head import Prediction
from memvote.loss import (
    EPSILON,
    FrameLoss,
    build_sets,
    center_loss,
    frame_loss,
    regression_loss,
    temporal_weights,
    total_loss,
)
from memvote.numerics import Tape, Tensor, check_gradients


class TestBuildSets:
    def test_hard_negatives_are_the_highest_scores(self) -> None:
        labels = np.array([1, 0, 0, IGNORE, 0, 1])
        scores = np.array([0.9, 0.2, 0.7, 0.99, 0.7, 0.5])

        positives, negatives = build_sets(labels, scores)

        np.testing.assert_array_equal(positives, [0, 5])
        # Ties go to the smaller index; the ignored anchor is never a negative.
        np.testing.assert_array_equal(negatives, [2, 4])

    def test_every_anchor_ignored(self) -> None:
        with pytest.raises(ContractViolation):
            build_sets(np.full(4, IGNORE), np.zeros(4))

    def test_no_positive(self) -> None:
        with pytest.raises(ContractViolation):
            build_sets(np.array([0, 0, IGNORE]), np.zeros(3))

    def test_not_enough_negatives(self) -> None:
        with pytest.raises(ContractViolation):
            build_sets(np.array([1, 1, 0]), np.zeros(3))

    def test_shapes_must_match(self) -> None:
        with pytest.raises(ContractViolation):
            build_sets(np.array([1, 0]), np.zeros(3))

    def test_matches_a_sorted_oracle_on_random_maps(self) -> None:
        rng = np.random.default_rng(17)
        checked = 0

        for _ in range(1000):
            size = int(rng.integers(2, 40))
            labels = rng.choice([1, 0, 0, 0, IGNORE], size=size)
            # One decimal leaves plenty of ties.
            scores = np.round(rng.uniform(0, 1, size), 1)

            positives = [index for index in range(size) if labels[index] == 1]
            negatives = [index for index in range(size) if labels[index] == 0]

            if not positives or len(negatives) < len(positives):
                with pytest.raises(ContractViolation):
                    build_sets(labels, scores)
                continue

            expected = sorted(negatives, key=lambda index: (-scores[index], index))[:len(positives)]
            found_positives, found_negatives = build_sets(labels, scores)

            assert found_positives.tolist() == positives
            assert found_negatives.tolist() == expected
            checked += 1

        assert checked > 500


class TestCenterLoss:
    def test_confident_positive(self) -> None:
        loss = center_loss(np.array([0]), np.array([], dtype=int), Tensor(np.array([0.9])))
        assert loss.item() == pytest.approx(1.0536e-3, rel=1e-3)

    def test_symmetric_pair(self) -> None:
        loss = center_loss(np.array([0]), np.array([1]), Tensor(np.array([0.9, 0.1])))
        assert loss.item() == pytest.approx(2 * 0.01 * -math.log(0.9), rel=1e-9)

    def test_perfect_prediction_is_zero(self) -> None:
        loss = center_loss(np.array([0]), np.array([1]), Tensor(np.array([1.0, 0.0])))
        assert 0.0 <= loss.item() < 1e-12

    def test_worst_prediction_is_finite(self) -> None:
        loss = center_loss(np.array([0]), np.array([1]), Tensor(np.array([0.0, 1.0])))

        assert np.isfinite(loss.item())
        assert loss.item() == pytest.approx(-2 * math.log(EPSILON), rel=1e-3)

    def test_loss_is_not_negative(self) -> None:
        scores = np.random.default_rng(0).uniform(size=20)
        loss = center_loss(np.arange(5), np.arange(5, 10), Tensor(scores))
        assert loss.item() >= 0.0

    def test_gradients(self) -> None:
        scores = np.random.default_rng(1).uniform(0.05, 0.95, size=(2, 3, 3))
        positives = np.array([0, 4])
        negatives = np.array([7, 12])

        assert check_gradients(lambda s: center_loss(positives, negatives, s), scores) < 1e-4

    def test_descending_the_gradient_lowers_the_loss(self) -> None:
        scores = Tensor(np.array([0.4, 0.6]), requires_grad=True)

        with Tape() as tape:
            loss = center_loss(np.array([0]), np.array([1]), scores)
        gradient = tape.backward(loss).of(scores)

        assert gradient[0] < 0 < gradient[1]


class TestRegressionLoss:
    def test_smooth_l1_values(self) -> None:
        regression = Tensor(np.array([0.5, 2.0, 0.0, 0.0]).reshape(4, 1, 1))
        loss = regression_loss(np.array([0]), np.zeros((4, 1, 1)), regression)

        assert loss.item() == pytest.approx(0.125 + 1.5)

    def test_only_positive_anchors_count(self) -> None:
        # Two anchors on a 1x2 grid: channels 4a + k.
        regression = np.zeros((8, 1, 2))
        regression[4:8, 0, 1] = 0.2
        regression[0:4, 0, 0] = 5.0

        loss = regression_loss(np.array([3]), np.zeros((8, 1, 2)), Tensor(regression))
        assert loss.item() == pytest.approx(4 * 0.5 * 0.04)

    def test_requires_positives(self) -> None:
        with pytest.raises(ContractViolation):
            regression_loss(np.array([], dtype=int), np.zeros((4, 1, 1)), Tensor(np.zeros((4, 1, 1))))

    def test_gradients(self) -> None:
        rng = np.random.default_rng(2)
        targets = rng.normal(size=(8, 2, 2))
        regression = targets + np.where(rng.uniform(size=targets.shape) > 0.5, 0.5, 1.8)

        assert check_gradients(lambda r: regression_loss(np.array([1, 6]), targets, r), regression) < 1e-4


class TestFrameLoss:
    def test_combines_both_terms(self) -> None:
        center = np.zeros((1, 2, 2), dtype=np.int8)
        center[0, 0, 0] = 1
        labels = LabelMaps(center, np.zeros((4, 2, 2)))
        prediction = Prediction(Tensor(np.full((1, 2, 2), 0.5)), Tensor(np.zeros((4, 2, 2))))

        frame = frame_loss(labels, prediction)

        assert frame.positives == 1
        assert frame.negatives == 1
        assert frame.center.item() == pytest.approx(2 * 0.25 * -math.log(0.5))
        assert frame.box.item() == 0.0

    def test_shape_mismatch(self) -> None:
        labels = LabelMaps(np.ones((2, 2, 2), dtype=np.int8), np.zeros((8, 2, 2)))
        prediction = Prediction(Tensor(np.full((1, 2, 2), 0.5)), Tensor(np.zeros((4, 2, 2))))

        with pytest.raises(ContractViolation):
            frame_loss(labels, prediction)


class TestTemporalWeights:
    def test_linear_weights_with_mean_one(self) -> None:
        np.testing.assert_allclose(temporal_weights(4), [0.4, 0.8, 1.2, 1.6])

    def test_single_frame(self) -> None:
        np.testing.assert_allclose(temporal_weights(1), [1.0])

    def test_explicit_distances(self) -> None:
        np.testing.assert_allclose(temporal_weights(2, [10, 30]), [0.5, 1.5])

    def test_invalid(self) -> None:
        with pytest.raises(ContractViolation):
            temporal_weights(0)

        with pytest.raises(ContractViolation):
            temporal_weights(2, [1.0])


class TestTotalLoss:
    def test_weighted_sum(self) -> None:
        frames = [
            FrameLoss(Tensor(np.array(1.0)), Tensor(np.array(2.0)), 1, 1),
            FrameLoss(Tensor(np.array(3.0)), Tensor(np.array(4.0)), 2, 2),
        ]

        total, report = total_loss(frames, weight=0.5)

        # Weights are 2/3 and 4/3.
        expected = 2 / 3 * (1.0 + 0.5 * 2.0) + 4 / 3 * (3.0 + 0.5 * 4.0)
        assert total.item() == pytest.approx(expected)
        assert report.total == pytest.approx(expected)
        assert report.center_loss == pytest.approx(2 / 3 * 1.0 + 4 / 3 * 3.0)
        assert report.box_loss == pytest.approx(2 / 3 * 2.0 + 4 / 3 * 4.0)
        assert report.positives == 3
        assert report.to_dict()['weights'] == pytest.approx([2 / 3, 4 / 3])
