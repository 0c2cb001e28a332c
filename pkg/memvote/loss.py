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

from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from numpy import ndarray

from .anchors import IGNORE, LabelMaps
from .exception import ContractViolation
from .head import Prediction
from .numerics import Tensor, functional as F

__all__ = [
    'EPSILON',
    'FrameLoss',
    'LossReport',
    'build_sets',
    'center_loss',
    'frame_loss',
    'regression_loss',
    'temporal_weights',
    'total_loss',
]

EPSILON: float = 1e-7
"""
Scores are clamped to [EPSILON, 1 - EPSILON] before taking logarithms.
"""


def build_sets(labels: ndarray, scores: ndarray) -> tuple[ndarray, ndarray]:
    """
    Function to build the flat anchor indexes of the positives and of as many hard negatives, the negatives with the
    highest scores. Ties go to the smaller index; ignored anchors belong to neither set.
    """
    labels = np.asarray(labels).reshape(-1)
    scores = np.asarray(scores).reshape(-1)

    if labels.shape != scores.shape:
        raise ContractViolation(f"Labels {labels.shape} and scores {scores.shape} must have the same size.")
    if np.all(labels == IGNORE):
        raise ContractViolation("Every anchor is ignored; there is nothing to learn from.")

    positives = np.flatnonzero(labels == 1)
    negatives = np.flatnonzero(labels == 0)

    if not len(positives):
        raise ContractViolation("Label map has no positive anchor.")
    if len(negatives) < len(positives):
        raise ContractViolation(f"Label map has {len(positives)} positives but only {len(negatives)} negatives.")

    order = np.argsort(-scores[negatives], kind='stable')
    hard = negatives[order[:len(positives)]]

    return positives, hard


def center_loss(positives: ndarray, negatives: ndarray, scores: Tensor) -> Tensor:
    """
    Function to compute the balanced focal loss
    -[Σ_pos (1 - x)² log x + Σ_neg x² log(1 - x)], which is zero for a perfect prediction.
    """
    flat = F.clip(F.reshape(scores, (-1,)), EPSILON, 1.0 - EPSILON)
    positive = F.take(flat, positives)
    negative = F.take(flat, negatives)

    missed = F.sub(1.0, positive)
    positive_term = F.sum(F.mul(F.mul(missed, missed), F.log(positive)))
    negative_term = F.sum(F.mul(F.mul(negative, negative), F.log(F.sub(1.0, negative))))

    return F.mul(F.add(positive_term, negative_term), -1.0)


def regression_loss(positives: ndarray, targets: ndarray, regression: Tensor) -> Tensor:
    """
    Function to sum the smooth L1 distance of the four displacement components over the positive anchors.
    Both `targets` and `regression` are laid out as [4A, H, W].
    """
    if not len(positives):
        raise ContractViolation("Regression loss requires at least one positive anchor.")

    channels, height, width = regression.shape
    anchors = channels // 4

    predicted = F.reshape(F.transpose(F.reshape(regression, (anchors, 4, height, width)), (0, 2, 3, 1)), (-1, 4))
    expected = np.transpose(np.asarray(targets).reshape(anchors, 4, height, width), (0, 2, 3, 1)).reshape(-1, 4)

    difference = F.sub(F.take(predicted, positives, axis=0), expected[positives])

    return F.sum(F.smooth_l1(difference))


@dataclass(frozen=True)
class FrameLoss:
    center: Tensor
    box: Tensor
    positives: int
    negatives: int


def frame_loss(labels: LabelMaps, prediction: Prediction) -> FrameLoss:
    """
    Function to compute both losses of one instance frame.
    """
    if labels.center.shape != prediction.center.shape:
        raise ContractViolation(f"Labels {labels.center.shape} do not match the prediction {prediction.center.shape}.")

    positives, negatives = build_sets(labels.center, prediction.center.data)

    return FrameLoss(
        center=center_loss(positives, negatives, prediction.center),
        box=regression_loss(positives, labels.regression, prediction.regression),
        positives=len(positives),
        negatives=len(negatives),
    )


def temporal_weights(count: int, distances: Sequence[float] | None = None) -> ndarray:
    """
    Function to weight instance frames linearly by their distance from the initial frame, normalized to mean one.
    Without `distances`, the n-th instance frame is at distance n.
    """
    if count < 1:
        raise ContractViolation("Temporal weighting requires at least one instance frame.")

    distances = np.arange(1, count + 1, dtype=np.float64) if distances is None else np.asarray(distances, float)

    if distances.shape != (count,) or np.any(distances <= 0):
        raise ContractViolation(f"Expected {count} positive distances, not {distances}.")

    return distances / distances.mean()


@dataclass(frozen=True)
class LossReport:
    center_loss: float
    box_loss: float
    weight: float
    total: float
    positives: int
    negatives: int
    weights: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        values = asdict(self)
        values['weights'] = list(self.weights)
        return values


def total_loss(
    frames: Sequence[FrameLoss],
    weight: float = 1.0,
    distances: Sequence[float] | None = None,
) -> tuple[Tensor, LossReport]:
    """
    Function to combine the per frame losses as Σ_n w_n (center_n + weight box_n).
    """
    weights = temporal_weights(len(frames), distances)

    total = None
    center_value = 0.0
    box_value = 0.0

    for frame_weight, frame in zip(weights, frames):
        term = F.mul(F.add(frame.center, F.mul(frame.box, weight)), float(frame_weight))
        total = term if total is None else F.add(total, term)

        center_value += float(frame_weight) * frame.center.item()
        box_value += float(frame_weight) * frame.box.item()

    report = LossReport(
        center_loss=center_value,
        box_loss=box_value,
        weight=float(weight),
        total=total.item(),
        positives=sum(frame.positives for frame in frames),
        negatives=sum(frame.negatives for frame in frames),
        weights=tuple(float(value) for value in weights),
    )

    return total, report
