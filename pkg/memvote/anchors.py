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
from typing import Sequence

import numpy as np
from numpy import ndarray

from .config import AnchorConfig
from .exception import ContractViolation

__all__ = [
    'IGNORE',
    'AnchorGrid',
    'BBox',
    'LabelMaps',
    'assign_labels',
    'decode',
    'decode_array',
    'encode',
    'encode_array',
    'iou',
    'iou_array',
]

IGNORE: int = -1
"""
Center label of anchors that are neither positive nor negative.
"""


@dataclass(frozen=True)
class BBox:
    """
    Axis aligned box in center convention, pixel units.
    """

    cx: float
    cy: float
    w: float
    h: float

    @classmethod
    def from_corner(cls, x: float, y: float, w: float, h: float) -> BBox:
        """
        Method to build a box from the top-left convention used by dataset files.
        """
        return cls(x + w / 2, y + h / 2, w, h)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> BBox:
        return cls(*(float(value) for value in values[:4]))

    def to_corner(self) -> tuple[float, float, float, float]:
        return self.cx - self.w / 2, self.cy - self.h / 2, self.w, self.h

    def as_array(self) -> ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)

    def is_valid(self) -> bool:
        values = (self.cx, self.cy, self.w, self.h)
        return all(math.isfinite(value) for value in values) and self.w > 0 and self.h > 0

    def validate(self) -> BBox:
        """
        Method to raise `ContractViolation` for non finite or non positive boxes.
        """
        if not self.is_valid():
            raise ContractViolation(f"Invalid box {self}: width and height must be positive and finite.")

        return self

    def scaled(self, factor: float) -> BBox:
        return BBox(self.cx * factor, self.cy * factor, self.w * factor, self.h * factor)


def iou_array(boxes: ndarray, other: ndarray) -> ndarray:
    """
    Function to compute the IoU between boxes [..., 4] and `other` [4] or [..., 4] in center convention.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    other = np.asarray(other, dtype=np.float64)

    left = np.maximum(boxes[..., 0] - boxes[..., 2] / 2, other[..., 0] - other[..., 2] / 2)
    right = np.minimum(boxes[..., 0] + boxes[..., 2] / 2, other[..., 0] + other[..., 2] / 2)
    top = np.maximum(boxes[..., 1] - boxes[..., 3] / 2, other[..., 1] - other[..., 3] / 2)
    bottom = np.minimum(boxes[..., 1] + boxes[..., 3] / 2, other[..., 1] + other[..., 3] / 2)

    intersection = np.clip(right - left, 0, None) * np.clip(bottom - top, 0, None)
    union = boxes[..., 2] * boxes[..., 3] + other[..., 2] * other[..., 3] - intersection

    return np.where(union > 0, intersection / np.where(union > 0, union, 1.0), 0.0)


def iou(a: BBox, b: BBox) -> float:
    """
    Function to compute the intersection over union of two valid boxes.
    """
    a.validate()
    b.validate()

    return float(iou_array(a.as_array(), b.as_array()))


def encode_array(gt: ndarray, anchors: ndarray) -> ndarray:
    """
    Function to compute displacements (tx, ty, tw, th) of `gt` [..., 4] relative to `anchors` [..., 4].
    """
    gt = np.asarray(gt, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)

    return np.stack([
        (gt[..., 0] - anchors[..., 0]) / anchors[..., 2],
        (gt[..., 1] - anchors[..., 1]) / anchors[..., 3],
        np.log(gt[..., 2] / anchors[..., 2]),
        np.log(gt[..., 3] / anchors[..., 3]),
    ], axis=-1)


def decode_array(displacements: ndarray, anchors: ndarray) -> ndarray:
    """
    Function to invert `encode_array`.
    """
    displacements = np.asarray(displacements, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)

    return np.stack([
        anchors[..., 0] + displacements[..., 0] * anchors[..., 2],
        anchors[..., 1] + displacements[..., 1] * anchors[..., 3],
        anchors[..., 2] * np.exp(displacements[..., 2]),
        anchors[..., 3] * np.exp(displacements[..., 3]),
    ], axis=-1)


def encode(gt: BBox, anchor: BBox) -> ndarray:
    gt.validate()
    anchor.validate()

    return encode_array(gt.as_array(), anchor.as_array())


def decode(displacement: Sequence[float], anchor: BBox) -> BBox:
    anchor.validate()

    return BBox.from_array(decode_array(np.asarray(displacement, dtype=np.float64), anchor.as_array()))


class AnchorGrid:
    """
    Class that holds the anchor boxes of every feature cell, in search-region coordinates.
    Anchor a at cell (y, x) is centered at ((x + 0.5) stride, (y + 0.5) stride); its flat index is
    a H W + y W + x, and its regression channels are 4a to 4a + 3.
    """

    stride: int = 16
    """
    Distance in pixels between the centers of two neighbour cells.
    """

    def __init__(self, ratios: Sequence[float], scale: float, size: int, stride: int = 16) -> None:
        if not ratios or size < 1:
            raise ContractViolation("Anchor grid requires at least one ratio and one cell.")

        self.ratios = tuple(float(ratio) for ratio in ratios)
        self.scale = float(scale)
        self.size = int(size)
        self.stride = int(stride)

        centers = (np.arange(self.size) + 0.5) * self.stride
        shapes = np.array([[self.scale / math.sqrt(ratio), self.scale * math.sqrt(ratio)] for ratio in self.ratios])

        boxes = np.empty((len(self.ratios), self.size, self.size, 4))
        boxes[..., 0] = centers[None, None, :]
        boxes[..., 1] = centers[None, :, None]
        boxes[..., 2] = shapes[:, 0, None, None]
        boxes[..., 3] = shapes[:, 1, None, None]

        self.boxes: ndarray = boxes
        self.boxes.flags.writeable = False

    @classmethod
    def from_config(cls, config: AnchorConfig, search_size: int, stride: int = 16) -> AnchorGrid:
        """
        Method to build the grid for a search region of `search_size` pixels.
        """
        scale = config.scale if config.scale is not None else search_size / 4
        return cls(config.ratios, scale, search_size // stride, stride)

    @property
    def count(self) -> int:
        """
        Number of anchors per cell.
        """
        return len(self.ratios)

    def flat(self) -> ndarray:
        return self.boxes.reshape(-1, 4)

    def box(self, anchor: int, y: int, x: int) -> BBox:
        return BBox.from_array(self.boxes[anchor, y, x])

    def unravel(self, index: int) -> tuple[int, int, int]:
        """
        Method to convert a flat index to (anchor, y, x).
        """
        return tuple(int(value) for value in np.unravel_index(index, (self.count, self.size, self.size)))


@dataclass(frozen=True)
class LabelMaps:
    """
    Center labels [A, H, W] with values 1, 0 or IGNORE, and regression targets [4A, H, W] filled at positives.
    """

    center: ndarray
    regression: ndarray

    @property
    def positives(self) -> ndarray:
        return self.center == 1


def assign_labels(gt: BBox, grid: AnchorGrid, pos_threshold: float, neg_threshold: float) -> LabelMaps:
    """
    Function to label every anchor by its IoU with `gt`: 1 at or above `pos_threshold`, 0 at or below
    `neg_threshold` and IGNORE in between. When no anchor reaches `pos_threshold`, the anchor with the highest IoU
    (the first one in flat order on ties) is made positive.
    """
    gt.validate()

    if not 0 <= neg_threshold < pos_threshold <= 1:
        raise ContractViolation(f"Thresholds must satisfy 0 <= neg < pos <= 1, not {neg_threshold} and {pos_threshold}.")

    if grid.boxes.size == 0:
        raise ContractViolation("Anchor grid is empty.")

    overlaps = iou_array(grid.boxes, gt.as_array())

    center = np.full(overlaps.shape, IGNORE, dtype=np.int8)
    center[overlaps <= neg_threshold] = 0
    center[overlaps >= pos_threshold] = 1

    if not np.any(center == 1):
        best = np.unravel_index(int(np.argmax(overlaps)), overlaps.shape)
        center[best] = 1

    displacements = encode_array(gt.as_array(), grid.boxes)
    displacements = np.where((center == 1)[..., None], displacements, 0.0)

    # [A, H, W, 4] to [4A, H, W] with channel 4a + k.
    regression = np.transpose(displacements, (0, 3, 1, 2)).reshape(-1, grid.size, grid.size)

    return LabelMaps(center, regression)
