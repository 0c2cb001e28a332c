from __future__ import annotations

import math

import numpy as np
import pytest

from memvote.config import EvalConfig
from memvote.exception import ContractViolation
from memvote.metrics import (
    ao_sr,
    center_errors,
    evaluate,
    evaluate_sequence,
    frame_ious,
    normalized_precision,
    precision_curve,
    success_curve,
)
from memvote.serializer import JSONSerializer
from memvote.storage import Storage

GROUND_TRUTH = np.array([[0.0, 0.0, 2.0, 2.0]] * 3)
PREDICTIONS = np.array([
    [0.0, 0.0, 2.0, 2.0],
    [0.0, 0.0, 2.0, 1.0],
    [50.0, 50.0, 2.0, 2.0],
])


class TestOverlap:
    def test_frame_ious(self) -> None:
        np.testing.assert_allclose(frame_ious(PREDICTIONS, GROUND_TRUTH), [1.0, 0.5, 0.0])

    def test_success_auc(self) -> None:
        thresholds, curve, auc = success_curve(PREDICTIONS, GROUND_TRUTH)

        assert len(thresholds) == 21
        assert curve[0] == 1.0
        assert curve[-1] == pytest.approx(1 / 3)
        assert auc == pytest.approx(11 / 21)

    def test_ao_and_success_rates(self) -> None:
        ao, sr_50, sr_75 = ao_sr(PREDICTIONS, GROUND_TRUTH)

        assert ao == pytest.approx(0.5)
        assert sr_50 == pytest.approx(2 / 3)
        assert sr_75 == pytest.approx(1 / 3)

    @pytest.mark.parametrize('box', [[0, 0, 0, 0], [0, 0, -1, 2], [math.nan, 0, 2, 2]])
    def test_invalid_prediction_is_a_failure(self, box: list[float]) -> None:
        pred = np.array([box], dtype=np.float64)

        assert frame_ious(pred, GROUND_TRUTH[:1])[0] == 0.0
        assert center_errors(pred, GROUND_TRUTH[:1])[0] == np.inf

    def test_lengths_must_match(self) -> None:
        with pytest.raises(ContractViolation):
            frame_ious(PREDICTIONS[:2], GROUND_TRUTH)

        with pytest.raises(ContractViolation):
            frame_ious(np.zeros((0, 4)), np.zeros((0, 4)))


class TestPrecision:
    def setup_method(self) -> None:
        self.gt = np.array([[100.0, 100.0, 20.0, 40.0]] * 4)
        self.pred = self.gt.copy()
        self.pred[:, 0] += [0.0, 10.0, 20.0, 30.0]

    def test_center_errors(self) -> None:
        np.testing.assert_allclose(center_errors(self.pred, self.gt), [0.0, 10.0, 20.0, 30.0])
        np.testing.assert_allclose(center_errors(self.pred, self.gt, normalized=True), [0.0, 0.5, 1.0, 1.5])

    def test_precision_at_twenty_pixels_is_inclusive(self) -> None:
        thresholds, curve, at = precision_curve(self.pred, self.gt)

        assert len(thresholds) == 51
        assert at == pytest.approx(0.75)
        assert curve[9] == pytest.approx(0.25)
        assert curve[10] == pytest.approx(0.5)
        assert curve[-1] == 1.0

    def test_normalized_precision(self) -> None:
        thresholds, curve, auc = normalized_precision(self.pred, self.gt)

        assert thresholds[-1] == pytest.approx(0.5)
        # Frame 0 passes every threshold, frame 1 only the last one.
        assert auc == pytest.approx((51 + 1) / (4 * 51))
        assert curve[0] == pytest.approx(0.25)


class TestReport:
    def setup_method(self) -> None:
        self.ground_truth = {'a': GROUND_TRUTH, 'b': GROUND_TRUTH, 'c': GROUND_TRUTH}
        self.predictions = {'a': PREDICTIONS, 'b': GROUND_TRUTH, 'c': PREDICTIONS[::-1]}
        self.tags = {'a': 'plain', 'b': 'plain', 'c': 'occlusion'}

    def test_sequence_metrics(self) -> None:
        metrics = evaluate_sequence('a', PREDICTIONS, GROUND_TRUTH, EvalConfig(), tag='plain')

        assert metrics.frames == 3
        assert metrics.success_auc == pytest.approx(11 / 21)
        assert metrics.values()['ao'] == pytest.approx(0.5)
        assert len(metrics.curves['precision']) == 51

    def test_mean_and_tags(self) -> None:
        report = evaluate(self.predictions, self.ground_truth, EvalConfig(), self.tags)

        assert [item.name for item in report.sequences] == ['a', 'b', 'c']
        assert report.mean['success_auc'] == pytest.approx((11 / 21 + 1.0 + 11 / 21) / 3)
        assert report.mean['sequences'] == 3
        assert set(report.tags) == {'plain', 'occlusion'}
        assert report.tags['plain']['success_auc'] == pytest.approx((11 / 21 + 1.0) / 2)

    def test_missing_ground_truth(self) -> None:
        with pytest.raises(ContractViolation):
            evaluate({'x': PREDICTIONS}, self.ground_truth)

    def test_save(self, tmp_path: object) -> None:
        report = evaluate(self.predictions, self.ground_truth, EvalConfig(), self.tags)
        path = report.save(str(tmp_path), plots=True)

        data = JSONSerializer.deserialize(Storage.read_text(path))
        assert data['mean']['success_auc'] == pytest.approx(report.mean['success_auc'])
        assert len(data['thresholds']['success']) == 21
        assert len(data['sequences']) == 3

        for name in ('success_plot.png', 'precision_plot.png', 'normalized_precision_plot.png'):
            assert Storage.is_file(Storage.join(str(tmp_path), name))
