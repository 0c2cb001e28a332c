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
from typing import Any

import numpy as np

from ..exception import ContractViolation
from ..nn.layers import Linear
from ..numerics import Tensor, functional as F
from . import Retriever, select_candidates

__all__ = [
    'VotingRetriever',
]


class VotingRetriever(Retriever):
    """
    Retrieval where the top K candidates vote for a consensus. Each token [value ∥ query] goes through an input
    bottleneck, one multi-head self-attention layer that never lets a candidate attend to itself, an output
    bottleneck, and an element-wise max over the candidates. There is no positional encoding, so the result does
    not depend on the candidate order.
    """

    mode = 'voting'

    def __init__(
        self,
        key_channels: int,
        value_channels: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        score_gate: bool = True,
        width: int = 64,
        heads: int = 8,
        **kwargs: Any,
    ) -> None:
        super().__init__(key_channels, value_channels, rng, dtype, score_gate)

        if width % heads:
            raise ContractViolation(f"Attention heads ({heads}) must divide the attention width ({width}).")

        self.width = width
        self.heads = heads

        self.input_bottleneck = Linear(value_channels + key_channels, width, rng=rng, dtype=dtype)
        self.attention_query = Linear(width, width, rng=rng, dtype=dtype)
        self.attention_key = Linear(width, width, rng=rng, dtype=dtype)
        self.attention_value = Linear(width, width, rng=rng, dtype=dtype)
        self.attention_output = Linear(width, width, rng=rng, dtype=dtype)
        self.output_bottleneck = Linear(width, value_channels, rng=rng, dtype=dtype, gain=2.0)

    def _split(self, x: Tensor) -> Tensor:
        locations, count, _ = x.shape
        head_width = self.width // self.heads

        return F.transpose(F.reshape(x, (locations, count, self.heads, head_width)), (0, 2, 1, 3))

    def attend(self, tokens: Tensor) -> Tensor:
        """
        Method to apply the multi-head self-attention with residual over tokens [L, K, width].
        The diagonal of the attention logits is excluded unless there is a single candidate.
        """
        locations, count, _ = tokens.shape
        head_width = self.width // self.heads

        queries = self._split(self.attention_query(tokens))
        keys = self._split(self.attention_key(tokens))
        values = self._split(self.attention_value(tokens))

        logits = F.mul(F.matmul(queries, F.transpose(keys, (0, 1, 3, 2))), 1.0 / math.sqrt(head_width))
        mask = np.eye(count, dtype=bool) if count > 1 else None
        weights = F.softmax_row(logits, mask=mask)

        mixed = F.transpose(F.matmul(weights, values), (0, 2, 1, 3))
        mixed = F.reshape(mixed, (locations, count, self.width))

        return F.add(tokens, self.attention_output(mixed))

    def vote(self, values: Tensor, queries: Tensor) -> Tensor:
        """
        Method to combine candidate values [L, K, C_v] of each query [L, C_k] into one value [L, C_v].
        """
        if values.ndim != 3 or values.shape[1] < 1:
            raise ContractViolation(f"Voting requires at least one candidate, not values of shape {values.shape}.")

        tokens = self.input_bottleneck(self.join_query(values, queries))
        mixed = self.attend(tokens)
        output = self.output_bottleneck(F.relu(mixed))

        return F.max_over_axis(output, axis=1)

    def combine(self, rows: Tensor, values: Tensor, queries: Tensor, top_k: int) -> Tensor:
        candidates = select_candidates(rows, values, top_k, score_gate=self.score_gate)
        return self.vote(candidates.values, queries)
