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

from typing import Any, Sequence

import cv2
import numpy as np
from numpy import ndarray

from . import ImageEngine

__all__ = [
    "OpenCVImage",
]


class OpenCVImage(ImageEngine):
    """
    Class that standardized methods of OpenCV library.
    This class depends on OpenCV being installed in the system.
    In OpenCV the image is basically a numpy matrix, kept here in RGB order as uint8 or float32.
    """

    @classmethod
    def create_from_array(cls, array: ndarray) -> OpenCVImage:
        """
        Method to instantiate the current class from an RGB array. Float arrays are kept as float32.
        """
        array = np.asarray(array)

        if array.dtype != np.uint8:
            array = array.astype(np.float32)

        return cls.create_from_image(np.ascontiguousarray(array))

    def blur(self, sigma: float) -> None:
        """
        Method to apply a gaussian blur to the current image.
        """
        if sigma <= 0:
            return

        self.image = cv2.GaussianBlur(self.image, (0, 0), sigmaX=sigma, sigmaY=sigma)

    def change_color(self, colorspace: str = "gray", **kwargs: Any) -> None:
        """
        Method to change the color space of the current image.
        Only `gray` is supported, with the luminance replicated in the three channels.
        """
        colorscheme: dict[str, int] = {
            "gray": cv2.COLOR_RGB2GRAY,
        }

        gray = cv2.cvtColor(self.image, colorscheme[colorspace])
        self.image = cv2.cvtColor(gray, cv2.COLOR_GRAY2RGB)

    def flip(self, horizontal: bool = True) -> None:
        """
        Method to mirror the current image.
        """
        self.image = cv2.flip(self.image, 1 if horizontal else 0)

    def get_array(self) -> ndarray:
        """
        Method to obtain a copy of the current image as an RGB array.
        """
        return np.array(self.image, copy=True)

    def get_bytes(self, encode_format: str = "png") -> bytes:
        """
        Method to obtain the bytes' representation for the content of the current image object.
        """
        formats: dict[str, str] = {
            "jpeg": ".jpg",
            "png": ".png",
        }
        image = np.clip(np.rint(self.image), 0, 255).astype(np.uint8)
        success, buffer = cv2.imencode(formats[encode_format], cv2.cvtColor(image, cv2.COLOR_RGB2BGR))

        if not success:
            raise ValueError(f"Could not convert image to format {encode_format} in OpenCVImage.get_bytes.")

        return buffer.tobytes()

    def get_size(self) -> tuple[int, int]:
        """
        Method to obtain the size of current image.
        OpenCV shape attribute is a tuple (height, width, channels).
        """
        return self.image.shape[1], self.image.shape[0]

    def prepare_image(self) -> None:
        """
        Method to prepare the image using the stored buffer as the source.
        """
        # convert to numpy array
        array = np.asarray(bytearray(self.source_buffer.read()), dtype="uint8")

        image = cv2.imdecode(array, cv2.IMREAD_COLOR)
        if image is None:
            raise ValueError("Could not decode image buffer in OpenCVImage.prepare_image.")

        self.image = cv2.cvtColor(image, cv2.COLOR_BGR2RGB)

    def warp_affine(self, matrix: ndarray, width: int, height: int, fill: Sequence[float] = (0, 0, 0)) -> None:
        """
        Method to apply an affine map over pixel indexes producing an image of `width` by `height`.
        """
        self.image = cv2.warpAffine(
            self.image,
            np.asarray(matrix, dtype=np.float64),
            (int(width), int(height)),
            flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_CONSTANT,
            borderValue=tuple(float(value) for value in fill),
        )
