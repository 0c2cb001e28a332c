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

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy import ndarray

from ..anchors import BBox
from ..exception import ContractViolation
from ..image.engine import ImageEngine

__all__ = [
    'CropTransform',
    'crop_search_region',
    'search_side',
]


def search_side(box: BBox, context_factor: float = 2.0) -> float:
    """
    Function to obtain the side of the search region around `box`: context_factor √((w + p)(h + p)) with
    p = (w + h) / 2.
    """
    box.validate()
    padding = (box.w + box.h) / 2
    return context_factor * math.sqrt((box.w + padding) * (box.h + padding))


@dataclass(frozen=True)
class CropTransform:
    """
    Similarity transform between image coordinates and the coordinates of a square crop of `side` pixels centered
    at (`center_x`, `center_y`) resized to `output_size`. Coordinates are continuous.
    """

    center_x: float
    center_y: float
    side: float
    output_size: int

    @property
    def scale(self) -> float:
        return self.output_size / self.side

    @property
    def origin(self) -> tuple[float, float]:
        return self.center_x - self.side / 2, self.center_y - self.side / 2

    def to_crop(self, points: ndarray) -> ndarray:
        """
        Method to map points [..., 2] from the image to the crop.
        """
        return (np.asarray(points, dtype=np.float64) - np.array(self.origin)) * self.scale

    def to_image(self, points: ndarray) -> ndarray:
        """
        Method to map points [..., 2] from the crop to the image.
        """
        return np.asarray(points, dtype=np.float64) / self.scale + np.array(self.origin)

    def box_to_crop(self, box: BBox) -> BBox:
        x, y = self.to_crop(np.array([box.cx, box.cy]))
        return BBox(float(x), float(y), box.w * self.scale, box.h * self.scale)

    def box_to_image(self, box: BBox) -> BBox:
        x, y = self.to_image(np.array([box.cx, box.cy]))
        return BBox(float(x), float(y), box.w / self.scale, box.h / self.scale)


def crop_search_region(
    frame: ndarray,
    box: BBox,
    output_size: int = 256,
    context_factor: float = 2.0,
    engine: str = 'opencv',
    fill: Sequence[float] | None = None,
) -> tuple[ndarray, CropTransform]:
    """
    Function to crop the search region centered on `box` and resize it to `output_size`. Areas outside the frame
    are filled with the channel means of the frame unless `fill` is given.
    """
    if not box.is_valid():
        raise ContractViolation(f"Cannot crop around the degenerate box {box}.")

    transform = CropTransform(box.cx, box.cy, search_side(box, context_factor), int(output_size))

    if fill is None:
        fill = tuple(float(value) for value in np.asarray(frame, dtype=np.float64).reshape(-1, 3).mean(axis=0))

    image = ImageEngine.get_engine(engine).create_from_array(frame)
    image.crop_region(transform.center_x, transform.center_y, transform.side, transform.output_size, fill)

    return image.get_array(), transform
