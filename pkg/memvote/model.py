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
from numpy import ndarray

from .anchors import AnchorGrid, BBox
from .backbone import Backbone, Normalizer
from .config import AnchorConfig, MemoryConfig, ModelConfig, RunConfig
from .head import Prediction, PredictionHead
from .memory import Memory, MemorySlot, ValueEncoder, encode_initial, maybe_write, WriteDecision
from .nn import Module
from .numerics import RandomStreams, Tensor
from .retrieval import Retriever

__all__ = [
    'TrackerNetwork',
]


class TrackerNetwork(Module):
    """
    Class that holds every trainable component together with the data the network needs to run: the input
    normalization, the anchor grid and the configurations used to build it.
    The same instance serves training and tracking; it is never modified during a forward pass.
    """

    def __init__(
        self,
        model: ModelConfig,
        anchors: AnchorConfig,
        memory: MemoryConfig,
        seed: int = 0,
        normalizer: Normalizer | None = None,
    ) -> None:
        self.model_config = model
        self.anchor_config = anchors
        self.memory_config = memory
        self.normalizer = normalizer or Normalizer()
        self.dtype = np.dtype(model.dtype)

        rng = RandomStreams(seed).stream('init')

        self.grid = AnchorGrid.from_config(anchors, model.search_size)

        self.backbone = Backbone(model.widths, model.key_channels, model.search_size, rng, self.dtype)
        self.encoder = ValueEncoder(
            model.key_channels,
            self.grid.count,
            model.value_channels,
            model.value_hidden,
            rng,
            self.dtype,
            score_floor=memory.score_floor,
            background=memory.background,
        )
        self.retriever = Retriever.get_retriever(model.mode)(
            model.key_channels,
            model.value_channels,
            rng,
            self.dtype,
            score_gate=model.score_gate,
            width=model.attention_width,
            heads=model.heads,
            hidden=model.mlp_hidden,
        )
        self.head = PredictionHead(
            model.key_channels,
            model.value_channels,
            self.grid.count,
            model.head_width,
            rng,
            self.dtype,
            score_prior=model.score_prior,
        )

    @classmethod
    def from_config(cls, config: RunConfig, normalizer: Normalizer | None = None) -> TrackerNetwork:
        """
        Method to build the network described by a run configuration.
        """
        return cls(config.model, config.anchors, config.memory, seed=config.seed, normalizer=normalizer)

    @property
    def search_size(self) -> int:
        return self.model_config.search_size

    @property
    def top_k(self) -> int:
        return self.model_config.top_k

    def extract(self, crop: ndarray) -> Tensor:
        """
        Method to obtain the key (or query) feature map of an RGB crop [S, S, 3].
        """
        return self.backbone(self.normalizer.apply(crop, self.dtype))

    def initial_slot(self, key: Tensor, box: BBox) -> MemorySlot:
        """
        Method to encode slot 0 from the key of the initial crop and the annotated box in crop coordinates.
        """
        return encode_initial(box, key, self.grid, self.encoder, self.anchor_config)

    def start_memory(self, key: Tensor, box: BBox, training: bool = False) -> Memory:
        return Memory.create(self.initial_slot(key, box), self.memory_config, training=training)

    def forward(self, query: Tensor, memory: Memory, top_k: int | None = None) -> Prediction:
        """
        Method to retrieve from `memory` and predict boxes for the query feature map.
        """
        retrieved = self.retriever(query, memory, top_k or self.top_k)
        return self.head(query, retrieved)

    def write(self, memory: Memory, frame_index: int, query: Tensor, prediction: Prediction) -> tuple[Memory, WriteDecision]:
        """
        Method to offer a predicted frame to the memory write policy. The peak is the maximum raw center score.
        """
        peak = float(np.max(prediction.center.data))
        return maybe_write(memory, frame_index, peak, query, prediction.center, prediction.regression, self.encoder)

    def describe(self) -> dict[str, Any]:
        return {
            'mode': self.model_config.mode,
            'parameters': self.count_parameters(),
            'anchors': self.grid.count,
            'feature_size': self.grid.size,
            'dtype': str(self.dtype),
        }
