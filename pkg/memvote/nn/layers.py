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

from typing import Any

import numpy as np

from ..numerics import Tensor, functional as F
from . import Module, Parameter

__all__ = [
    'Conv2d',
    'Linear',
]


class Conv2d(Module):
    """
    Square convolution over a [C, H, W] tensor with He initialization and half-kernel zero padding.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        rng: np.random.Generator | None = None,
        dtype: Any = np.float64,
        bias_value: float = 0.0,
        gain: float = 2.0,
    ) -> None:
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size

        self.stride = stride
        self.weight = Parameter(
            rng.normal(0.0, np.sqrt(gain / fan_in), (out_channels, in_channels, kernel_size, kernel_size)),
            dtype=dtype,
        )
        self.bias = Parameter(np.full(out_channels, bias_value), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride)


class Linear(Module):
    """
    Affine map over the last axis with weight [in, out].
    """

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator | None = None,
        dtype: Any = np.float64,
        gain: float = 1.0,
    ) -> None:
        rng = rng if rng is not None else np.random.default_rng(0)

        self.weight = Parameter(rng.normal(0.0, np.sqrt(gain / in_features), (in_features, out_features)), dtype=dtype)
        self.bias = Parameter(np.zeros(out_features), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)
