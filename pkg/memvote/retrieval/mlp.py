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

from ..nn.layers import Linear
from ..numerics import Tensor, functional as F
from . import Retriever, select_candidates

__all__ = [
    'TopKMLPRetriever',
]


class TopKMLPRetriever(Retriever):
    """
    Retrieval where each of the top K candidates, joined with the query, goes independently through a two layer
    perceptron before an element-wise max over the candidates.
    """

    mode = 'topk_mlp'

    def __init__(
        self,
        key_channels: int,
        value_channels: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        score_gate: bool = True,
        hidden: int = 64,
        **kwargs: Any,
    ) -> None:
        super().__init__(key_channels, value_channels, rng, dtype, score_gate)

        self.first = Linear(value_channels + key_channels, hidden, rng=rng, dtype=dtype, gain=2.0)
        self.second = Linear(hidden, value_channels, rng=rng, dtype=dtype)

    def process(self, values: Tensor, queries: Tensor) -> Tensor:
        """
        Method to run the perceptron over candidate values [L, K, C_v] and pool them into [L, C_v].
        """
        tokens = self.join_query(values, queries)
        return F.max_over_axis(self.second(F.relu(self.first(tokens))), axis=1)

    def combine(self, rows: Tensor, values: Tensor, queries: Tensor, top_k: int) -> Tensor:
        candidates = select_candidates(rows, values, top_k, score_gate=self.score_gate)
        return self.process(candidates.values, queries)
