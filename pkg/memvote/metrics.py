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
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from numpy import ndarray

from .anchors import iou_array
from .config import EvalConfig
from .exception import ContractViolation
from .serializer import JSONSerializer
from .storage import Storage

__all__ = [
    'EvalReport',
    'SequenceMetrics',
    'ao_sr',
    'center_errors',
    'evaluate',
    'evaluate_sequence',
    'frame_ious',
    'normalized_precision',
    'plot_curves',
    'precision_curve',
    'success_curve',
]

METRIC_NAMES: tuple[str, ...] = ('success_auc', 'precision', 'normalized_precision', 'ao', 'sr_50', 'sr_75')


def _pair(pred: Any, gt: Any) -> tuple[ndarray, ndarray]:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 4)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 4)

    if pred.shape != gt.shape:
        raise ContractViolation(f"Predictions ({len(pred)} frames) and ground truth ({len(gt)} frames) differ.")
    if not len(gt):
        raise ContractViolation("Metrics require at least one frame.")

    return pred, gt


def _valid(boxes: ndarray) -> ndarray:
    return np.all(np.isfinite(boxes), axis=1) & (boxes[:, 2] > 0) & (boxes[:, 3] > 0)


def frame_ious(pred: Any, gt: Any) -> ndarray:
    """
    Function to compute the IoU of every frame. Empty or invalid predictions count as IoU 0.
    """
    pred, gt = _pair(pred, gt)
    valid = _valid(pred)
    safe = np.where(valid[:, None], pred, 0.0)

    return np.where(valid, iou_array(safe, gt), 0.0)


def center_errors(pred: Any, gt: Any, normalized: bool = False) -> ndarray:
    """
    Function to compute the center distance of every frame, in pixels or normalized by the ground truth size as
    ‖(Δx / w, Δy / h)‖. Invalid predictions are infinitely far.
    """
    pred, gt = _pair(pred, gt)
    difference = pred[:, :2] - gt[:, :2]

    if normalized:
        difference = difference / gt[:, 2:4]

    errors = np.sqrt(np.sum(difference * difference, axis=1))
    return np.where(_valid(pred), errors, np.inf)


def success_curve(pred: Any, gt: Any, points: int = 21) -> tuple[ndarray, ndarray, float]:
    """
    Function to compute the fraction of frames with IoU ≥ t for t in {0, 0.05, ..., 1}. The AUC is the mean of
    the curve.
    """
    ious = frame_ious(pred, gt)
    thresholds = np.linspace(0.0, 1.0, points)
    curve = np.mean(ious[:, None] >= thresholds[None, :], axis=0)

    return thresholds, curve, float(np.mean(curve))


def precision_curve(pred: Any, gt: Any, max_distance: int = 50, at: float = 20.0) -> tuple[ndarray, ndarray, float]:
    """
    Function to compute the fraction of frames with center error ≤ d for d in 0..`max_distance` pixels, and the
    value at `at` pixels.
    """
    errors = center_errors(pred, gt)
    thresholds = np.arange(0, max_distance + 1, dtype=np.float64)
    curve = np.mean(errors[:, None] <= thresholds[None, :], axis=0)

    return thresholds, curve, float(np.mean(errors <= at))


def normalized_precision(pred: Any, gt: Any, maximum: float = 0.5, points: int = 51) -> tuple[ndarray, ndarray, float]:
    """
    Function to compute the normalized precision curve over thresholds 0..`maximum` and its AUC (the mean).
    """
    errors = center_errors(pred, gt, normalized=True)
    thresholds = np.linspace(0.0, maximum, points)
    curve = np.mean(errors[:, None] <= thresholds[None, :], axis=0)

    return thresholds, curve, float(np.mean(curve))


def ao_sr(pred: Any, gt: Any) -> tuple[float, float, float]:
    """
    Function to compute the average overlap and the success rates at IoU 0.5 and 0.75.
    """
    ious = frame_ious(pred, gt)
    return float(np.mean(ious)), float(np.mean(ious >= 0.5)), float(np.mean(ious >= 0.75))


@dataclass
class SequenceMetrics:
    name: str
    frames: int
    success_auc: float
    precision: float
    normalized_precision: float
    ao: float
    sr_50: float
    sr_75: float
    tag: str | None = None
    curves: dict[str, list[float]] = field(default_factory=dict, repr=False)

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def evaluate_sequence(name: str, pred: Any, gt: Any, config: EvalConfig | None = None, tag: str | None = None) -> SequenceMetrics:
    """
    Function to compute every metric of one sequence.
    """
    config = config or EvalConfig()

    _, success, success_auc = success_curve(pred, gt)
    _, precision, precision_at = precision_curve(pred, gt, config.precision_max, config.precision_at)
    _, normalized, normalized_auc = normalized_precision(pred, gt, config.normalized_max, config.normalized_points)
    ao, sr_50, sr_75 = ao_sr(pred, gt)

    return SequenceMetrics(
        name=name,
        frames=len(np.asarray(gt).reshape(-1, 4)),
        success_auc=success_auc,
        precision=precision_at,
        normalized_precision=normalized_auc,
        ao=ao,
        sr_50=sr_50,
        sr_75=sr_75,
        tag=tag,
        curves={
            'success': success.tolist(),
            'precision': precision.tolist(),
            'normalized_precision': normalized.tolist(),
        },
    )


def _mean(items: list[SequenceMetrics]) -> dict[str, Any]:
    if not items:
        return {}

    summary: dict[str, Any] = {name: float(np.mean([item.values()[name] for item in items])) for name in METRIC_NAMES}
    summary['sequences'] = len(items)
    summary['curves'] = {
        key: np.mean([item.curves[key] for item in items], axis=0).tolist() for key in items[0].curves
    }
    return summary


@dataclass
class EvalReport:
    """
    Metrics of every sequence, their mean, and the mean of every sequence tag.
    """

    sequences: list[SequenceMetrics]
    config: EvalConfig = field(default_factory=EvalConfig)

    @property
    def mean(self) -> dict[str, Any]:
        return _mean(self.sequences)

    @property
    def tags(self) -> dict[str, dict[str, Any]]:
        groups: dict[str, list[SequenceMetrics]] = {}
        for item in self.sequences:
            if item.tag:
                groups.setdefault(item.tag, []).append(item)

        return {tag: _mean(items) for tag, items in sorted(groups.items())}

    def to_dict(self) -> dict[str, Any]:
        return {
            'mean': self.mean,
            'tags': self.tags,
            'sequences': [
                {'name': item.name, 'tag': item.tag, 'frames': item.frames, **item.values(), 'curves': item.curves}
                for item in self.sequences
            ],
            'thresholds': {
                'success': np.linspace(0.0, 1.0, 21).tolist(),
                'precision': list(range(self.config.precision_max + 1)),
                'normalized_precision': np.linspace(0.0, self.config.normalized_max,
                                                    self.config.normalized_points).tolist(),
            },
        }

    def save(self, directory: str, plots: bool = False) -> str:
        """
        Method to write `report.json`, and the curve plots when `plots` is set, into `directory`.
        """
        path = Storage.join(directory, 'report.json')
        Storage.save_text(path, JSONSerializer.serialize(self.to_dict(), primitives=True, indent=2))

        if plots:
            plot_curves(self, directory)

        return path


def evaluate(
    predictions: Mapping[str, ndarray],
    ground_truth: Mapping[str, ndarray],
    config: EvalConfig | None = None,
    tags: Mapping[str, str | None] | None = None,
) -> EvalReport:
    """
    Function to evaluate every sequence present in `predictions`. A sequence without ground truth is an error.
    """
    config = config or EvalConfig()
    tags = tags or {}
    items = []

    for name in sorted(predictions):
        if name not in ground_truth:
            raise ContractViolation(f"No ground truth for predicted sequence {name}.")

        items.append(evaluate_sequence(name, predictions[name], ground_truth[name], config, tags.get(name)))

    return EvalReport(items, config)


def plot_curves(report: EvalReport, directory: str) -> list[str]:
    """
    Function to draw the success and precision plots of the mean and of every tag.
    """
    import matplotlib

    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    data = report.to_dict()
    groups = {'all': data['mean'], **data['tags']}
    written = []

    plots = (
        ('success', 'Overlap threshold', 'Success rate', 'success_auc'),
        ('precision', 'Location error threshold (px)', 'Precision', 'precision'),
        ('normalized_precision', 'Normalized error threshold', 'Normalized precision', 'normalized_precision'),
    )

    for key, xlabel, ylabel, metric in plots:
        fig, ax = plt.subplots()
        thresholds = data['thresholds'][key]

        for name, group in groups.items():
            if not group:
                continue
            ax.plot(thresholds, group['curves'][key], label=f"{name}: [{group[metric]:.3f}]")

        ax.set(xlabel=xlabel, ylabel=ylabel, xlim=(thresholds[0], thresholds[-1]), ylim=(0, 1),
               title=f"{ylabel} plots")
        ax.grid(True)
        ax.legend(loc='lower right' if key != 'success' else 'lower left')
        fig.tight_layout()

        path = Storage.join(directory, f"{key}_plot.png")
        Storage.create_directory(directory)
        fig.savefig(path, dpi=150)
        plt.close(fig)

        logging.debug(f"Saved {key} plot to {path}.")
        written.append(path)

    return written
