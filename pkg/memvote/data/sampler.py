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
from dataclasses import dataclass

import numpy as np
from numpy import ndarray

from ..anchors import AnchorGrid, BBox, LabelMaps, assign_labels
from ..config import AnchorConfig, AugmentConfig, DataConfig
from ..exception import ContractViolation
from ..pipelines import Pipeline
from ..pipelines.augmenter import AugmentSample, augmentation_pipeline
from .crop import CropTransform, crop_search_region
from .sequence import Sequence

__all__ = [
    'TrainingClip',
    'TrainingFrame',
    'sample_frame_indices',
    'sample_training_clip',
]


@dataclass(frozen=True)
class TrainingFrame:
    """
    One augmented crop with its target box and labels, both in crop coordinates.
    """

    crop: ndarray
    box: BBox
    labels: LabelMaps
    frame_index: int
    transform: CropTransform


@dataclass(frozen=True)
class TrainingClip:
    """
    Frames sampled from one sequence in increasing order. The first frame is the initial frame.
    """

    sequence: str
    frames: tuple[TrainingFrame, ...]

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def initial(self) -> TrainingFrame:
        return self.frames[0]

    @property
    def instances(self) -> tuple[TrainingFrame, ...]:
        return self.frames[1:]

    @property
    def frame_indexes(self) -> list[int]:
        return [frame.frame_index for frame in self.frames]


def sample_frame_indices(length: int, count: int, max_skip: int, rng: np.random.Generator) -> list[int]:
    """
    Function to draw `count` increasing frame indexes of a sequence of `length` frames with gaps between 1 and
    `max_skip`, starting at a random frame.
    """
    if count < 2:
        raise ContractViolation(f"A clip requires at least 2 frames, not {count}.")
    if length < count:
        raise ContractViolation(f"Cannot sample {count} frames from a sequence of {length}.")

    largest = max(1, min(max_skip, (length - 1) // (count - 1)))
    gaps = rng.integers(1, largest + 1, count - 1)
    start = int(rng.integers(0, length - int(gaps.sum())))

    return [start, *(start + np.cumsum(gaps)).tolist()]


def _jitter(box: BBox, amount: float, rng: np.random.Generator) -> BBox:
    shift = rng.uniform(-amount, amount, 2)
    return BBox(box.cx + shift[0] * box.w, box.cy + shift[1] * box.h, box.w, box.h)


def sample_training_clip(
    sequence: Sequence,
    count: int,
    rng: np.random.Generator,
    grid: AnchorGrid,
    anchors: AnchorConfig,
    data: DataConfig,
    augment: AugmentConfig | None = None,
    search_size: int = 256,
    pipeline: Pipeline | None = None,
) -> TrainingClip | None:
    """
    Function to sample a training clip of `count` frames. Every crop is centered on the (jittered, except for the
    initial frame) ground truth, augmented, and labeled against `grid`.
    A sequence shorter than `count` is skipped and None is returned.
    """
    if len(sequence) < count:
        logging.warning(f"Sequence {sequence.name} has {len(sequence)} frames, fewer than the {count} required; "
                        f"skipping it.")
        return None

    if pipeline is None and augment is not None:
        pipeline = augmentation_pipeline(augment)

    indices = sample_frame_indices(len(sequence), count, data.max_skip, rng)
    frames = []

    for position, index in enumerate(indices):
        frame = sequence.frame(index)
        box = sequence.box(index)
        center = box if position == 0 else _jitter(box, data.center_jitter, rng)

        fill = tuple(float(value) for value in np.asarray(frame, dtype=np.float64).reshape(-1, 3).mean(axis=0))
        crop, transform = crop_search_region(frame, center, search_size, data.context_factor, data.engine, fill)

        sample = AugmentSample(crop, transform.box_to_crop(box), fill, data.engine)
        if pipeline is not None:
            pipeline.run(sample, rng=rng)

        labels = assign_labels(sample.box, grid, anchors.pos_threshold, anchors.neg_threshold)
        frames.append(TrainingFrame(sample.image, sample.box, labels, index, transform))

    return TrainingClip(sequence.name, tuple(frames))
