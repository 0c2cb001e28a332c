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
import time
from dataclasses import dataclass, replace
from typing import Sequence as SequenceType

import numpy as np
from numpy import ndarray

from .anchors import BBox, decode_array
from .config import DataConfig, TrackerConfig
from .data import CropTransform, Sequence, crop_search_region
from .exception import ContractViolation, NumericFault
from .handler import System
from .memory import Memory, WriteDecision
from .model import TrackerNetwork
from .storage import Storage

__all__ = [
    'TrackResult',
    'Tracker',
    'TrackerState',
    'read_predictions',
    'track_sequences',
    'write_predictions',
]


@dataclass(frozen=True)
class TrackerState:
    """
    Everything that changes while tracking one sequence. Every step returns a new state.
    """

    box: BBox
    memory: Memory
    frame_index: int
    frame_size: tuple[int, int]

    @property
    def last_written(self) -> int:
        return self.memory.last_written


@dataclass(frozen=True)
class TrackResult:
    frame_index: int
    box: BBox
    score: float
    decision: WriteDecision | None = None
    fault: bool = False


class Tracker:
    """
    Class that runs a trained network over a video: crop around the previous estimate, extract the query, retrieve
    from the memory, predict, pick the best anchor under a cosine window, decode it to the image, and offer the
    frame to the memory write policy.
    """

    def __init__(
        self,
        network: TrackerNetwork,
        config: TrackerConfig | None = None,
        data: DataConfig | None = None,
    ) -> None:
        self.network = network
        self.config = config or TrackerConfig()
        self.data = data or DataConfig()

        size = network.grid.size
        self.window: ndarray = np.outer(np.hanning(size), np.hanning(size))

    @property
    def top_k(self) -> int:
        return self.config.top_k or self.network.top_k

    def crop(self, frame: ndarray, box: BBox) -> tuple[ndarray, CropTransform]:
        return crop_search_region(frame, box, self.network.search_size, self.data.context_factor, self.data.engine)

    def init(self, frame: ndarray, gt: BBox) -> TrackerState:
        """
        Method to start tracking with the annotated box of the first frame, written as memory slot 0.
        """
        gt.validate()
        height, width = frame.shape[:2]

        if not (0 <= gt.cx < width and 0 <= gt.cy < height):
            raise ContractViolation(f"Initial box {gt} is outside the frame of {width}x{height}.")

        crop, transform = self.crop(frame, gt)
        key = self.network.extract(crop)
        memory = self.network.start_memory(key, transform.box_to_crop(gt))

        return TrackerState(gt, memory, 0, (width, height))

    def select(self, scores: ndarray) -> tuple[int, int, int]:
        """
        Method to pick the (anchor, y, x) maximizing the scores multiplied by the cosine window. The window is
        lifted toward one by `1 - window_weight`, so a weight of zero is a plain argmax. Ties go to the first index
        in flat order.
        """
        weight = self.config.window_weight
        blended = scores * ((1.0 - weight) + weight * self.window[None, :, :])
        return self.network.grid.unravel(int(np.argmax(blended)))

    def clip_box(self, box: BBox, frame_size: tuple[int, int]) -> BBox:
        width, height = frame_size
        minimum = self.config.min_size

        return BBox(
            float(np.clip(box.cx, 0, width)),
            float(np.clip(box.cy, 0, height)),
            float(np.clip(box.w, minimum, max(minimum, width))),
            float(np.clip(box.h, minimum, max(minimum, height))),
        )

    def step(self, state: TrackerState, frame: ndarray) -> tuple[TrackerState, TrackResult]:
        """
        Method to track one frame. A non finite prediction keeps the previous box and skips the memory write.
        """
        frame_index = state.frame_index + 1
        crop, transform = self.crop(frame, state.box)

        try:
            query = self.network.extract(crop)
            prediction = self.network(query, state.memory, self.top_k)

            anchor, y, x = self.select(prediction.center.data)
            displacement = prediction.regression.data[4 * anchor:4 * anchor + 4, y, x]

            with np.errstate(over='ignore'):
                decoded = decode_array(displacement, self.network.grid.boxes[anchor, y, x])

            if not np.all(np.isfinite(decoded)) or decoded[2] <= 0 or decoded[3] <= 0:
                raise NumericFault(f"Decoded box {decoded} is not finite.")

        except NumericFault as error:
            logging.warning(f"Frame {frame_index} has a non finite prediction ({error}); keeping the previous box.")
            result = TrackResult(frame_index, state.box, 0.0, fault=True)
            return replace(state, frame_index=frame_index), result

        box = self.clip_box(transform.box_to_image(BBox.from_array(decoded)), state.frame_size)
        score = float(prediction.center.data[anchor, y, x])

        memory, decision = self.network.write(state.memory, frame_index, query, prediction)

        result = TrackResult(frame_index, box, score, decision)
        return TrackerState(box, memory, frame_index, state.frame_size), result

    def track(self, sequence: Sequence) -> list[TrackResult]:
        """
        Method to track a whole sequence from its first annotated box. The first result is the annotation.
        """
        state = self.init(sequence.frame(0), sequence.box(0))
        results = [TrackResult(0, sequence.box(0), 1.0)]

        for index in range(1, len(sequence)):
            state, result = self.step(state, sequence.frame(index))
            results.append(result)

        return results


def track_sequences(
    tracker: Tracker,
    sequences: SequenceType[Sequence],
    workers: int = 1,
) -> tuple[dict[str, list[TrackResult]], float]:
    """
    Function to track every sequence, in parallel over `workers` threads, returning the results by name and the
    frames per second of the whole run.
    """
    started = time.perf_counter()
    results = System.map(tracker.track, list(sequences), workers=System.get_worker_count(workers))
    elapsed = time.perf_counter() - started

    frames = sum(len(sequence) - 1 for sequence in sequences)
    fps = frames / elapsed if elapsed > 0 else float('inf')

    return {sequence.name: result for sequence, result in zip(sequences, results)}, fps


def write_predictions(path: str, results: SequenceType[TrackResult]) -> None:
    """
    Function to write one "frame_index,x,y,w,h,score" line per frame, with the box in top-left convention.
    """
    lines = []
    for result in results:
        x, y, w, h = result.box.to_corner()
        lines.append(f"{result.frame_index},{x:.4f},{y:.4f},{w:.4f},{h:.4f},{result.score:.6f}")

    Storage.save_text(path, "\n".join(lines) + "\n")


def read_predictions(path: str) -> tuple[ndarray, ndarray, ndarray]:
    """
    Function to read a prediction file into frame indexes [T], boxes [T, 4] in center convention and scores [T].
    Lines that can't be parsed become boxes of zero size, which count as a failure in every metric.
    """
    indexes, boxes, scores = [], [], []

    for number, line in enumerate(Storage.read_lines(path), start=1):
        if not line.strip():
            continue

        parts = line.split(',')
        try:
            index = int(parts[0])
            x, y, w, h, score = (float(part) for part in parts[1:6])
        except (ValueError, IndexError):
            logging.warning(f"{path}:{number}: could not parse prediction {line!r}; counted as a failure.")
            indexes.append(len(indexes))
            boxes.append((0.0, 0.0, 0.0, 0.0))
            scores.append(0.0)
            continue

        indexes.append(index)
        boxes.append((x + w / 2, y + h / 2, w, h))
        scores.append(score)

    return np.asarray(indexes, dtype=int), np.asarray(boxes, dtype=np.float64).reshape(-1, 4), np.asarray(scores)
