from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from memvote.anchors import BBox
from memvote.config import AugmentConfig
from memvote.exception import ImproperlyConfigured
from memvote.pipelines import Pipeline
from memvote.pipelines.augmenter import (
    AugmentSample,
    Augmenter,
    BlurAugmenter,
    FlipAugmenter,
    GrayAugmenter,
    StretchAugmenter,
    augmentation_pipeline,
)


def _sample(engine: str = 'opencv') -> AugmentSample:
    image = np.random.default_rng(0).integers(0, 255, (32, 32, 3), dtype=np.uint8)
    return AugmentSample(image, BBox(20.0, 16.0, 8.0, 6.0), (0.0, 0.0, 0.0), engine)


class _Failing(Augmenter):
    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        raise ValueError("broken crop")


class TestFlip:
    @pytest.mark.parametrize('engine', ['opencv', 'pillow'])
    def test_image_and_box(self, engine: str) -> None:
        sample = _sample(engine)
        original = sample.image.copy()

        FlipAugmenter.augment(sample, np.random.default_rng(0))

        np.testing.assert_array_equal(sample.image, original[:, ::-1])
        assert sample.box == BBox(12.0, 16.0, 8.0, 6.0)

    def test_twice_is_identity(self) -> None:
        sample = _sample()
        original = sample.image.copy()

        FlipAugmenter.augment(sample, np.random.default_rng(0))
        FlipAugmenter.augment(sample, np.random.default_rng(0))

        np.testing.assert_array_equal(sample.image, original)
        assert sample.box == BBox(20.0, 16.0, 8.0, 6.0)


class TestStretch:
    def test_box_follows_the_crop_center(self) -> None:
        sample = _sample()
        StretchAugmenter.stretch(sample, 1.5, 0.5)

        assert (sample.box.cx, sample.box.cy, sample.box.w, sample.box.h) == pytest.approx((22.0, 16.0, 12.0, 3.0))
        assert sample.image.shape == (32, 32, 3)

    def test_content_follows_the_box(self) -> None:
        image = np.zeros((32, 32, 3), dtype=np.uint8)
        image[:, 20:22] = 255
        sample = AugmentSample(image, BBox(21.0, 16.0, 2.0, 32.0))

        StretchAugmenter.stretch(sample, 2.0, 1.0)

        assert sample.box.cx == pytest.approx(26.0)
        assert np.all(sample.image[:, 26] > 200)
        assert np.all(sample.image[:, 21] < 50)

    def test_factors_stay_inside_the_range(self) -> None:
        rng = np.random.default_rng(3)

        for _ in range(20):
            sample = _sample()
            StretchAugmenter.augment(sample, rng, strength=0.1)
            assert 0.9 * 8.0 <= sample.box.w <= 1.1 * 8.0
            assert 0.9 * 6.0 <= sample.box.h <= 1.1 * 6.0


class TestColor:
    def test_gray_replicates_the_luminance(self) -> None:
        sample = _sample()
        GrayAugmenter.augment(sample, np.random.default_rng(0))

        assert sample.image.shape == (32, 32, 3)
        np.testing.assert_array_equal(sample.image[..., 0], sample.image[..., 1])
        np.testing.assert_array_equal(sample.image[..., 1], sample.image[..., 2])

    def test_blur_smooths_and_keeps_the_box(self) -> None:
        sample = _sample()
        before = sample.image.astype(np.float64).std()

        BlurAugmenter.augment(sample, np.random.default_rng(0), sigma=1.5)

        assert sample.image.shape == (32, 32, 3)
        assert sample.image.astype(np.float64).std() < before
        assert sample.box == BBox(20.0, 16.0, 8.0, 6.0)


class TestProcess:
    def test_probability_zero_leaves_the_sample(self) -> None:
        sample = _sample()
        original = sample.image.copy()

        assert not FlipAugmenter.process(object_to_process=sample, rng=np.random.default_rng(0), probability=0.0)
        np.testing.assert_array_equal(sample.image, original)

    def test_probability_one_applies(self) -> None:
        sample = _sample()
        assert FlipAugmenter.process(object_to_process=sample, rng=np.random.default_rng(0), probability=1.0)
        assert sample.box.cx == 12.0

    @pytest.mark.parametrize('probability', [0.0, 1.0])
    def test_one_draw_whatever_the_outcome(self, probability: float) -> None:
        rng, reference = np.random.default_rng(7), np.random.default_rng(7)

        FlipAugmenter.process(object_to_process=_sample(), rng=rng, probability=probability)
        reference.random()

        assert rng.random() == reference.random()

    def test_errors_are_registered_in_the_run(self) -> None:
        errors: list[Exception] = []

        assert not _Failing.process(object_to_process=_sample(), rng=np.random.default_rng(0), probability=1.0,
                                    errors=errors)
        assert [str(error) for error in errors] == ['broken crop']
        assert not hasattr(Augmenter, 'errors')


class TestPipeline:
    def test_order_and_parameters(self) -> None:
        pipeline = augmentation_pipeline(AugmentConfig(flip=0.3, stretch=0.4, stretch_range=0.2, blur=0.1,
                                                       blur_sigma=2.0, gray=0.5))

        assert [processor.classname for processor in pipeline] == [
            StretchAugmenter, BlurAugmenter, GrayAugmenter, FlipAugmenter,
        ]
        assert pipeline[0].parameters == {'probability': 0.4, 'strength': 0.2}
        assert pipeline[1].parameters == {'probability': 0.1, 'sigma': 2.0}

    def test_run_records_what_was_applied(self) -> None:
        pipeline = augmentation_pipeline(AugmentConfig(flip=1.0, stretch=0.0, blur=0.0, gray=1.0))
        sample = _sample()

        run = pipeline.run(sample, rng=np.random.default_rng(0))

        assert run.applied == [False, False, True, True]
        assert run.errors == []
        assert sample.box.cx == 12.0

    def test_dotted_path_processors(self) -> None:
        pipeline = Pipeline(('memvote.pipelines.augmenter.FlipAugmenter', {'probability': 1.0}))
        assert pipeline[0].classname is FlipAugmenter

    def test_invalid_processors(self) -> None:
        with pytest.raises(ImproperlyConfigured):
            Pipeline()

        with pytest.raises(ImproperlyConfigured):
            Pipeline('memvote.pipelines.augmenter.Missing')

        with pytest.raises(ImproperlyConfigured):
            Pipeline(BBox)

    def test_runs_do_not_share_errors(self) -> None:
        pipeline = Pipeline((_Failing, {'probability': 1.0}), (FlipAugmenter, {'probability': 1.0}))

        first = pipeline.run(_sample(), rng=np.random.default_rng(0))
        second = pipeline.run(_sample(), rng=np.random.default_rng(1))

        assert first.applied == second.applied == [False, True]
        assert len(first.errors) == len(second.errors) == 1
        assert first.errors[0] is not second.errors[0]

    def test_same_stream_same_outcome(self) -> None:
        pipeline = augmentation_pipeline(AugmentConfig(flip=0.5, stretch=0.5, blur=0.5, gray=0.5))
        first, second = _sample(), _sample()

        applied = pipeline.run(first, rng=np.random.default_rng(11)).applied
        assert pipeline.run(second, rng=np.random.default_rng(11)).applied == applied

        np.testing.assert_array_equal(first.image, second.image)
        assert first.box == second.box
