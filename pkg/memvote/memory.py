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

import logging
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .anchors import AnchorGrid, BBox, assign_labels
from .config import AnchorConfig, MemoryConfig
from .exception import ContractViolation
from .nn import Module
from .nn.layers import Conv2d
from .numerics import Tensor, functional as F
from .serializer import JSONSerializer
from .storage import Storage

__all__ = [
    'VALUE_LAYOUT',
    'Memory',
    'MemorySlot',
    'ValueEncoder',
    'WriteDecision',
    'encode_initial',
    'maybe_write',
    'save_snapshot',
    'snapshot',
]

VALUE_LAYOUT: tuple[str, ...] = ('key', 'scores', 'regressions')
"""
Channel order of the value encoder input.
"""


class ValueEncoder(Module):
    """
    Two convolutions with a ReLU between them over [key ∥ scores ∥ regressions]. Scores under `score_floor` are zeroed
    before encoding, and the whole map is encoded so background cells are part of the value.
    """

    def __init__(
        self,
        key_channels: int,
        anchor_count: int,
        value_channels: int,
        hidden_channels: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        score_floor: float = 0.5,
        background: bool = True,
    ) -> None:
        self.key_channels = key_channels
        self.anchor_count = anchor_count
        self.score_floor = score_floor
        self.background = background

        self.conv_a = Conv2d(key_channels + 5 * anchor_count, hidden_channels, 3, rng=rng, dtype=dtype)
        self.conv_b = Conv2d(hidden_channels, value_channels, 3, rng=rng, dtype=dtype, gain=1.0)

    def forward(self, key: Tensor, score_map: Tensor, reg_map: Tensor) -> Tensor:
        """
        Method to encode the value of a memory frame.
        """
        if key.ndim != 3 or key.shape[0] != self.key_channels:
            raise ContractViolation(f"Value encoder expects a key with {self.key_channels} channels, not {key.shape}.")
        if score_map.shape != (self.anchor_count, *key.shape[1:]):
            raise ContractViolation(f"Value encoder expects a score map of shape {(self.anchor_count, *key.shape[1:])}, "
                                    f"not {score_map.shape}.")
        if reg_map.shape != (4 * self.anchor_count, *key.shape[1:]):
            raise ContractViolation(f"Value encoder expects a regression map of shape "
                                    f"{(4 * self.anchor_count, *key.shape[1:])}, not {reg_map.shape}.")

        kept = score_map.data >= self.score_floor
        scores = F.mul(score_map, kept.astype(score_map.dtype))

        hidden = F.relu(self.conv_a(F.concat([key, scores, reg_map], axis=0)))
        value = self.conv_b(hidden)

        if not self.background:
            foreground = np.any(kept, axis=0, keepdims=True).astype(value.dtype)
            value = F.mul(value, foreground)

        return value


@dataclass(frozen=True)
class MemorySlot:
    key: Tensor
    value: Tensor
    frame_index: int
    peak_score: float


@dataclass(frozen=True)
class WriteDecision:
    """
    Record of one call to `maybe_write`. `rule` is `written`, `disabled`, `interval` or `threshold`; when both
    the interval and the threshold fail, `interval` is reported and both flags are kept.
    """

    frame_index: int
    peak_score: float
    rule: str
    interval_ok: bool
    score_ok: bool
    evicted: int | None = None

    @property
    def written(self) -> bool:
        return self.rule == 'written'


@dataclass(frozen=True)
class Memory:
    """
    Immutable ordered list of slots where slot 0 is the initial frame. Writes return a new Memory.
    """

    slots: tuple[MemorySlot, ...]
    capacity: int = 32
    interval: int = 30
    threshold: float = 0.7
    enabled: bool = True
    unconditional: bool = False
    last_frame: int = 0

    @classmethod
    def create(cls, initial: MemorySlot, config: MemoryConfig, training: bool = False) -> Memory:
        """
        Method to start a memory holding only the initial slot.
        """
        if initial.frame_index != 0:
            raise ContractViolation(f"The initial slot must have frame index 0, not {initial.frame_index}.")
        if config.capacity < 2:
            raise ContractViolation(f"Memory capacity must hold the initial slot and one written slot, not "
                                    f"{config.capacity}.")

        return cls(
            slots=(initial,),
            capacity=config.capacity,
            interval=config.interval,
            threshold=config.threshold,
            enabled=config.enabled,
            unconditional=training and config.training_writes == 'always',
            last_frame=0,
        )

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def last_written(self) -> int:
        return self.slots[-1].frame_index

    @property
    def frame_indexes(self) -> list[int]:
        return [slot.frame_index for slot in self.slots]

    def keys(self) -> list[Tensor]:
        return [slot.key for slot in self.slots]

    def values(self) -> list[Tensor]:
        return [slot.value for slot in self.slots]


def encode_initial(gt: BBox, key: Tensor, grid: AnchorGrid, encoder: ValueEncoder, anchors: AnchorConfig) -> MemorySlot:
    """
    Function to build slot 0 from the annotated box: a one-hot score map over the positive anchors and their exact
    displacements, encoded with the key of the initial frame.
    """
    labels = assign_labels(gt, grid, anchors.pos_threshold, anchors.neg_threshold)

    score_map = Tensor((labels.center == 1).astype(np.float64), dtype=key.dtype)
    reg_map = Tensor(labels.regression, dtype=key.dtype)

    return MemorySlot(key=key, value=encoder(key, score_map, reg_map), frame_index=0, peak_score=1.0)


def maybe_write(
    memory: Memory,
    frame_index: int,
    peak_score: float,
    key: Tensor,
    score_map: Tensor,
    reg_map: Tensor,
    encoder: ValueEncoder,
) -> tuple[Memory, WriteDecision]:
    """
    Function to apply the write policy. A frame is written when the memory is enabled, at least `interval` frames
    passed since the last written frame and `peak_score` reaches `threshold`; a training memory writes every frame.
    On overflow the oldest slot after the initial one is evicted. The value is only encoded when written.
    """
    if frame_index <= memory.last_frame:
        raise ContractViolation(f"Frame index {frame_index} must be greater than the last seen {memory.last_frame}.")

    interval_ok = frame_index - memory.last_written >= memory.interval
    score_ok = peak_score >= memory.threshold

    if memory.unconditional:
        rule = 'written'
    elif not memory.enabled:
        rule = 'disabled'
    elif not interval_ok:
        rule = 'interval'
    elif not score_ok:
        rule = 'threshold'
    else:
        rule = 'written'

    if rule != 'written':
        decision = WriteDecision(frame_index, peak_score, rule, interval_ok, score_ok)
        return replace(memory, last_frame=frame_index), decision

    slot = MemorySlot(key=key, value=encoder(key, score_map, reg_map), frame_index=frame_index, peak_score=peak_score)
    slots = memory.slots + (slot,)
    evicted = None

    if len(slots) > memory.capacity:
        evicted = slots[1].frame_index
        slots = slots[:1] + slots[2:]
        logging.debug(f"Memory full, evicting frame {evicted}.")

    decision = WriteDecision(frame_index, peak_score, rule, interval_ok, score_ok, evicted)
    return replace(memory, slots=slots, last_frame=frame_index), decision


def snapshot(memory: Memory) -> dict[str, Any]:
    """
    Function to dump the memory metadata and tensors for debugging.
    """
    return {
        'format': 'memvote-memory',
        'version': 1,
        'capacity': memory.capacity,
        'interval': memory.interval,
        'threshold': memory.threshold,
        'enabled': memory.enabled,
        'last_frame': memory.last_frame,
        'value_layout': list(VALUE_LAYOUT),
        'slots': [
            {
                'frame_index': slot.frame_index,
                'peak_score': slot.peak_score,
                'key': slot.key.numpy(),
                'value': slot.value.numpy(),
            }
            for slot in memory.slots
        ],
    }


def save_snapshot(memory: Memory, path: str) -> None:
    """
    Function to write `snapshot` using the checkpoint container format.
    """
    Storage.save_text(path, JSONSerializer.serialize(snapshot(memory)))
