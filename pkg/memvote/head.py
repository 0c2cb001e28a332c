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
from typing import Any

import numpy as np

from .exception import ContractViolation
from .nn import Module
from .nn.layers import Conv2d
from .numerics import Tensor, functional as F

__all__ = [
    'Branch',
    'Prediction',
    'PredictionHead',
]


@dataclass(frozen=True)
class Prediction:
    """
    Center score map [A, H, W] inside (0, 1) and regression map [4A, H, W] with channel 4a + k.
    """

    center: Tensor
    regression: Tensor

    @property
    def anchor_count(self) -> int:
        return self.center.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.center.data)) and np.all(np.isfinite(self.regression.data)))


class Branch(Module):
    """
    Two 3x3 convolutions with ReLU followed by a 1x1 projection.
    """

    def __init__(
        self,
        in_channels: int,
        width: int,
        out_channels: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        bias_value: float = 0.0,
    ) -> None:
        self.conv_a = Conv2d(in_channels, width, 3, rng=rng, dtype=dtype)
        self.conv_b = Conv2d(width, width, 3, rng=rng, dtype=dtype)
        self.projection = Conv2d(width, out_channels, 1, rng=rng, dtype=dtype, bias_value=bias_value, gain=0.1)

    def forward(self, x: Tensor) -> Tensor:
        return self.projection(F.relu(self.conv_b(F.relu(self.conv_a(x)))))


class PredictionHead(Module):
    """
    Box prediction over [query ∥ retrieved]: a score branch ending in a sigmoid and an independent regression
    branch. The score bias starts at the logit of `score_prior`.
    """

    def __init__(
        self,
        key_channels: int,
        value_channels: int,
        anchor_count: int,
        width: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        score_prior: float = 0.01,
    ) -> None:
        self.key_channels = key_channels
        self.value_channels = value_channels
        self.anchor_count = anchor_count

        prior = -math.log((1.0 - score_prior) / score_prior)
        channels = key_channels + value_channels

        self.score = Branch(channels, width, anchor_count, rng, dtype, bias_value=prior)
        self.regression = Branch(channels, width, 4 * anchor_count, rng, dtype)

    def forward(self, query: Tensor, retrieved: Tensor) -> Prediction:
        """
        Method to predict the center scores and box displacements of every anchor.
        """
        if query.ndim != 3 or retrieved.ndim != 3 or query.shape[1:] != retrieved.shape[1:]:
            raise ContractViolation(f"Query {query.shape} and retrieved value {retrieved.shape} must share the "
                                    f"spatial size.")
        if query.shape[0] != self.key_channels or retrieved.shape[0] != self.value_channels:
            raise ContractViolation(f"Head expects {self.key_channels} query and {self.value_channels} value "
                                    f"channels, not {query.shape[0]} and {retrieved.shape[0]}.")

        joined = F.concat([query, retrieved], axis=0)

        return Prediction(
            center=F.sigmoid(self.score(joined)),
            regression=self.regression(joined),
        )
