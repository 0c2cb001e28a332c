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

from importlib import import_module
from io import BytesIO
from typing import Any, Sequence, Type

import numpy as np
from numpy import ndarray

from ...exception import ImproperlyConfigured

__all__ = [
    "ImageEngine",
]


class ImageEngine:
    """
    Class that standardized methods of different image manipulators.
    Images are exchanged with the rest of the package as RGB arrays of shape [height, width, 3].
    """

    image: Any
    image = None
    """
    Attribute where the current image converted from buffer is stored.
    """
    class_image: Type[Any] | None = None
    """
    Attribute used to store the class reference responsible to create an image.
    This attribute should be override by child class.
    """
    engines: dict[str, str] = {
        'opencv': 'memvote.image.engine.opencv.OpenCVImage',
        'pillow': 'memvote.image.engine.pillow.PillowImage',
    }
    """
    Attribute with the dotted path of the engines available by name.
    """

    def __init__(self, buffer: BytesIO | None) -> None:
        """
        Method to instantiate the current class using a buffer for the image content as a source
        for manipulation by the class to be used.
        """
        self.source_buffer = buffer

        if buffer:
            self.prepare_image()

    @classmethod
    def get_engine(cls, name: str) -> Type[ImageEngine]:
        """
        Method to obtain the engine class registered under `name`.
        """
        try:
            module_path, class_name = cls.engines[name].rsplit('.', 1)
        except KeyError:
            raise ImproperlyConfigured(f"Image engine {name} is not available. Options are: {sorted(cls.engines)}.")

        return getattr(import_module(module_path), class_name)

    @classmethod
    def create_from_image(cls, image: Any) -> ImageEngine:
        """
        Method to instantiate the current class using a preprocessed image of the same class.
        """
        self = cls(buffer=None)
        self.image = image

        return self

    @classmethod
    def create_from_array(cls, array: ndarray) -> ImageEngine:
        """
        Method to instantiate the current class from an RGB array.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method create_from_array should be override in child class.")

    @staticmethod
    def crop_matrix(center_x: float, center_y: float, side: float, output_size: int) -> ndarray:
        """
        Method to obtain the 2x3 affine matrix, over pixel indexes, that maps the square of `side` centered at
        (`center_x`, `center_y`) to an image of `output_size`.
        Coordinates are continuous, with pixel i covering [i, i + 1).
        """
        scale = output_size / side
        left = center_x - side / 2
        top = center_y - side / 2

        return np.array([
            [scale, 0.0, scale * (0.5 - left) - 0.5],
            [0.0, scale, scale * (0.5 - top) - 0.5],
        ])

    def blur(self, sigma: float) -> None:
        """
        Method to apply a gaussian blur to the current image.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method blur should be override in child class.")

    def change_color(self, colorspace: str = "gray", **kwargs: Any) -> None:
        """
        Method to change the color space of the current image keeping three channels.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method change_color should be override in child class.")

    def crop_region(
        self,
        center_x: float,
        center_y: float,
        side: float,
        output_size: int,
        fill: Sequence[float] = (0, 0, 0)
    ) -> None:
        """
        Method to crop a square region around a center and resize it to `output_size`, filling the area outside
        the image with `fill`.
        This method must affect the current image object.
        """
        self.warp_affine(self.crop_matrix(center_x, center_y, side, output_size), output_size, output_size, fill)

    def flip(self, horizontal: bool = True) -> None:
        """
        Method to mirror the current image.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method flip should be override in child class.")

    def get_array(self) -> ndarray:
        """
        Method to obtain a copy of the current image as an RGB array [height, width, 3].
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method get_array should be override in child class.")

    def get_bytes(self, encode_format: str = "png") -> bytes:
        """
        Method to obtain the bytes' representation for the content of the current image object.
        This method must return bytes already compressed by format.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method get_bytes should be override in child class.")

    def get_size(self) -> tuple[int, int]:
        """
        Method to obtain the size of current image.
        This method should return a tuple with width and height.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method get_size should be override in child class.")

    def prepare_image(self) -> None:
        """
        Method to prepare the image using the stored buffer as the source.
        This method should use `self.source_buffer` and `self.image` to set the current image object.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method prepare_image should be override in child class.")

    def stretch(self, scale_x: float, scale_y: float, fill: Sequence[float] = (0, 0, 0)) -> None:
        """
        Method to stretch the content of the current image around its center keeping its size.
        The point at continuous coordinate u moves to c + s (u - c), with c the image center.
        """
        width, height = self.get_size()
        center_x, center_y = width / 2, height / 2

        matrix = np.array([
            [scale_x, 0.0, center_x + scale_x * (0.5 - center_x) - 0.5],
            [0.0, scale_y, center_y + scale_y * (0.5 - center_y) - 0.5],
        ])
        self.warp_affine(matrix, width, height, fill)

    def warp_affine(self, matrix: ndarray, width: int, height: int, fill: Sequence[float] = (0, 0, 0)) -> None:
        """
        Method to apply an affine map, given over pixel indexes from source to destination, producing an
        image of `width` by `height` with bilinear interpolation.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method warp_affine should be override in child class.")
