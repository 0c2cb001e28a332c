"""
MemVote is a package for tracking visual objects with a part-level dense memory
and a voting-based memory retrieval, small enough to be trained on a desk.

Copyright (C) 2021 Gabriel Fontenelle Senno Silva

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.

Should there be a need for contact the electronic mail
`memvote <at> gabrielfontenelle.com` can be used.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from numpy import ndarray

from ..anchors import BBox
from ..config import AugmentConfig
from ..image.engine import ImageEngine
from . import Pipeline

__all__ = [
    'AugmentSample',
    'Augmenter',
    'BlurAugmenter',
    'FlipAugmenter',
    'GrayAugmenter',
    'StretchAugmenter',
    'augmentation_pipeline',
]


@dataclass
class AugmentSample:
    """
    Crop being augmented together with the target box in crop coordinates.
    """

    image: ndarray
    box: BBox
    fill: Sequence[float] = (0.0, 0.0, 0.0)
    engine: str = 'opencv'

    def open(self) -> ImageEngine:
        return ImageEngine.get_engine(self.engine).create_from_array(self.image)


class Augmenter:
    """
    Base class to be inherent to define class to be used on the augmentation pipeline.
    Each augmenter draws one uniform number per sample, applied or not, so the random stream advances the same way
    whatever the outcome.
    """

    @classmethod
    def register_error(cls, error: Exception, errors: list[Exception] | None = None) -> None:
        """
        Method to register an error found while augmenting in the `errors` of the current run.
        """
        if errors is not None:
            errors.append(error)

        logging.error(f"{cls.__name__} failed: {error}")

    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        """
        Method to transform the sample in place.
        This method must be override in child class.
        """
        raise NotImplementedError("Method augment must be overwritten on child class.")

    @classmethod
    def process(cls, **kwargs: Any) -> bool:
        """
        Method used to run this class on Processor`s Pipeline. Returns whether the augmentation was applied.
        """
        sample: AugmentSample = kwargs.pop('object_to_process')
        rng: np.random.Generator = kwargs.pop('rng')
        probability: float = kwargs.pop('probability', 0.0)
        errors: list[Exception] | None = kwargs.pop('errors', None)

        if rng.random() >= probability:
            return False

        try:
            cls.augment(sample, rng, **kwargs)
        except (ValueError, OSError) as error:
            cls.register_error(error, errors)
            return False

        return True


class FlipAugmenter(Augmenter):
    """
    Horizontal mirror; the box center moves to W - cx.
    """

    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        image = sample.open()
        image.flip(horizontal=True)
        width, _ = image.get_size()

        sample.image = image.get_array()
        sample.box = BBox(width - sample.box.cx, sample.box.cy, sample.box.w, sample.box.h)


class StretchAugmenter(Augmenter):
    """
    Independent scaling of both axes about the crop center, by factors inside [1 - r, 1 + r]. The box follows.
    """

    @classmethod
    def stretch(cls, sample: AugmentSample, scale_x: float, scale_y: float) -> None:
        image = sample.open()
        width, height = image.get_size()
        image.stretch(scale_x, scale_y, sample.fill)

        center_x, center_y = width / 2, height / 2
        box = sample.box

        sample.image = image.get_array()
        sample.box = BBox(
            center_x + scale_x * (box.cx - center_x),
            center_y + scale_y * (box.cy - center_y),
            box.w * scale_x,
            box.h * scale_y,
        )

    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        strength = kwargs.get('strength', 0.1)
        scale_x, scale_y = 1.0 + rng.uniform(-strength, strength, 2)
        cls.stretch(sample, float(scale_x), float(scale_y))


class BlurAugmenter(Augmenter):
    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        image = sample.open()
        image.blur(kwargs.get('sigma', 1.5))
        sample.image = image.get_array()


class GrayAugmenter(Augmenter):
    @classmethod
    def augment(cls, sample: AugmentSample, rng: np.random.Generator, **kwargs: Any) -> None:
        image = sample.open()
        image.change_color(colorspace='gray')
        sample.image = image.get_array()


def augmentation_pipeline(config: AugmentConfig) -> Pipeline:
    """
    Function to build the augmentation pipeline: stretch, blur, gray and flip, each with its probability.
    """
    return Pipeline(
        (StretchAugmenter, {'probability': config.stretch, 'strength': config.stretch_range}),
        (BlurAugmenter, {'probability': config.blur, 'sigma': config.blur_sigma}),
        (GrayAugmenter, {'probability': config.gray}),
        (FlipAugmenter, {'probability': config.flip}),
    )
