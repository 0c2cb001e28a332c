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

from io import BytesIO
from typing import Any, Sequence, Type

import numpy as np
from numpy import ndarray
from PIL import Image as PillowImageClass, ImageFilter, ImageOps

from . import ImageEngine

__all__ = [
    "PillowImage",
]


class PillowImage(ImageEngine):
    """
    Class that standardized methods of Pillow library.
    Pillow works over 8 bits per channel, so arrays are rounded to uint8 when loaded.
    """

    class_image: Type[PillowImageClass.Image] = PillowImageClass.Image
    """
    Attribute used to store the class reference responsible to create an image.
    """

    @classmethod
    def create_from_array(cls, array: ndarray) -> PillowImage:
        """
        Method to instantiate the current class from an RGB array.
        """
        array = np.clip(np.rint(np.asarray(array, dtype=np.float64)), 0, 255).astype(np.uint8)
        return cls.create_from_image(PillowImageClass.fromarray(array))

    def blur(self, sigma: float) -> None:
        """
        Method to apply a gaussian blur to the current image.
        """
        if sigma <= 0:
            return

        self.image = self.image.filter(ImageFilter.GaussianBlur(radius=sigma))

    def change_color(self, colorspace: str = "gray", **kwargs: Any) -> None:
        """
        Method to change the color space of the current image.
        Only `gray` is supported, with the luminance replicated in the three channels.
        """
        colorscheme: dict[str, str] = {
            "gray": "L",
        }

        self.image = self.image.convert(colorscheme[colorspace]).convert("RGB")

    def flip(self, horizontal: bool = True) -> None:
        """
        Method to mirror the current image.
        """
        self.image = ImageOps.mirror(self.image) if horizontal else ImageOps.flip(self.image)

    def get_array(self) -> ndarray:
        """
        Method to obtain a copy of the current image as an RGB array.
        """
        return np.array(self.image, dtype=np.uint8, copy=True)

    def get_bytes(self, encode_format: str = "png") -> bytes:
        """
        Method to obtain the bytes' representation for the content of the current image object.
        """
        buffer = BytesIO()
        self.image.save(buffer, format=encode_format)

        return buffer.getvalue()

    def get_size(self) -> tuple[int, int]:
        """
        Method to obtain the size of current image.
        """
        return self.image.size

    def prepare_image(self) -> None:
        """
        Method to prepare the image using the stored buffer as the source.
        """
        image = PillowImageClass.open(self.source_buffer)
        image.load()

        self.image = image.convert("RGB")

    def warp_affine(self, matrix: ndarray, width: int, height: int, fill: Sequence[float] = (0, 0, 0)) -> None:
        """
        Method to apply an affine map over pixel indexes producing an image of `width` by `height`.
        Pillow expects the inverse map over continuous coordinates, so the matrix is converted first.
        """
        linear = np.asarray(matrix, dtype=np.float64)[:, :2]
        translation = np.asarray(matrix, dtype=np.float64)[:, 2] + 0.5 - 0.5 * linear.sum(axis=1)

        inverse = np.linalg.inv(linear)
        data = np.concatenate([inverse, (-inverse @ translation)[:, None]], axis=1).reshape(-1)

        self.image = self.image.transform(
            (int(width), int(height)),
            PillowImageClass.Transform.AFFINE,
            data=tuple(float(value) for value in data),
            resample=PillowImageClass.Resampling.BILINEAR,
            fillcolor=tuple(int(round(value)) for value in fill),
        )
