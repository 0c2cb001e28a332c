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

from typing import Any, Iterable, Sequence

import numpy as np
from numpy import ndarray

from .exception import ContractViolation
from .nn import Module
from .nn.layers import Conv2d
from .numerics import Tensor, functional as F

__all__ = [
    'Backbone',
    'Normalizer',
    'ResidualStage',
]


class Normalizer:
    """
    Class that holds the per-channel mean and standard deviation of the training frames.
    """

    mean: ndarray
    std: ndarray

    def __init__(self, mean: Sequence[float] = (127.5, 127.5, 127.5), std: Sequence[float] = (64.0, 64.0, 64.0)) -> None:
        self.mean = np.asarray(mean, dtype=np.float64).reshape(3)
        self.std = np.maximum(np.asarray(std, dtype=np.float64).reshape(3), 1e-6)

    @classmethod
    def from_frames(cls, frames: Iterable[ndarray]) -> Normalizer:
        """
        Method to compute the statistics over RGB frames [H, W, 3].
        """
        count = 0
        total = np.zeros(3)
        squares = np.zeros(3)

        for frame in frames:
            pixels = np.asarray(frame, dtype=np.float64).reshape(-1, 3)
            count += len(pixels)
            total += pixels.sum(axis=0)
            squares += (pixels * pixels).sum(axis=0)

        if not count:
            return cls()

        mean = total / count
        variance = np.maximum(squares / count - mean * mean, 0.0)

        return cls(mean, np.sqrt(variance))

    def to_dict(self) -> dict[str, Any]:
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}

    def apply(self, image: ndarray, dtype: Any = np.float64) -> Tensor:
        """
        Method to normalize an RGB image [H, W, 3] into a constant tensor [3, H, W].
        """
        normalized = (np.asarray(image, dtype=np.float64) - self.mean) / self.std
        return Tensor(np.transpose(normalized, (2, 0, 1)), dtype=dtype)


class ResidualStage(Module):
    """
    Stage that halves the resolution: conv 3x3 stride 2, ReLU, conv 3x3, plus a 1x1 stride 2 shortcut, then ReLU.
    """

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype: Any) -> None:
        self.conv_a = Conv2d(in_channels, out_channels, 3, stride=2, rng=rng, dtype=dtype)
        self.conv_b = Conv2d(out_channels, out_channels, 3, stride=1, rng=rng, dtype=dtype, gain=1.0)
        self.shortcut = Conv2d(in_channels, out_channels, 1, stride=2, rng=rng, dtype=dtype, gain=1.0)

    def forward(self, x: Tensor) -> Tensor:
        hidden = F.relu(self.conv_a(x))
        return F.relu(self.conv_b(hidden) + self.shortcut(x))


class Backbone(Module):
    """
    Shared feature extractor with four residual stages of stride 2 (output stride 16).
    The third stage goes through a stride 2 bottleneck and the fourth through a stride 1 bottleneck; both halves are
    concatenated into `key_channels` channels. The same instance encodes queries and memory keys.
    """

    output_stride: int = 16

    def __init__(
        self,
        widths: Sequence[int],
        key_channels: int,
        input_size: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
    ) -> None:
        if len(widths) != 4:
            raise ContractViolation(f"Backbone requires four stage widths, not {len(widths)}.")

        self.input_size = int(input_size)
        self.key_channels = int(key_channels)
        self.stages = []

        channels = 3
        for width in widths:
            self.stages.append(ResidualStage(channels, width, rng, dtype))
            channels = width

        shallow_channels = self.key_channels // 2
        self.bottleneck_shallow = Conv2d(widths[2], shallow_channels, 3, stride=2, rng=rng, dtype=dtype, gain=1.0)
        self.bottleneck_deep = Conv2d(widths[3], self.key_channels - shallow_channels, 3, stride=1, rng=rng,
                                      dtype=dtype, gain=1.0)

    @property
    def output_size(self) -> int:
        return self.input_size // self.output_stride

    def forward(self, x: Tensor) -> Tensor:
        """
        Method to extract a feature map [key_channels, S/16, S/16] from a normalized crop [3, S, S].
        """
        if x.shape != (3, self.input_size, self.input_size):
            raise ContractViolation(f"Backbone expects input of shape (3, {self.input_size}, {self.input_size}), "
                                    f"not {x.shape}.")

        features = []
        for stage in self.stages:
            x = stage(x)
            features.append(x)

        shallow = self.bottleneck_shallow(features[2])
        deep = self.bottleneck_deep(features[3])

        return F.concat([shallow, deep], axis=0)
