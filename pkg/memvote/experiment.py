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
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Sequence as SequenceType

import numpy as np

from .config import MemoryConfig, RunConfig
from .data import Sequence, load_otb_directory, synthetic_suite
from .metrics import EvalReport, evaluate
from .serializer import JSONSerializer
from .storage import Storage
from .tracker import Tracker, track_sequences
from .trainer import load_checkpoint, network_from_checkpoint

__all__ = [
    'AblationRow',
    'AblationTable',
    'BenchCell',
    'OrderingCheck',
    'ablate',
    'bench',
    'load_sequences',
    'ordering_checks',
    'run_configuration',
]

K_VALUES: tuple[int, ...] = (1, 2, 4, 8, 16)
MODE_ORDER: tuple[str, ...] = ('voting', 'topk_mlp', 'softmax')
ORDER_MARGIN: float = 0.01
"""
Minimum AUC difference, as a fraction, for a mode ordering to pass.
"""


def load_sequences(config: RunConfig, split: str = 'train', count: int | None = None) -> list[Sequence]:
    """
    Function to obtain the sequences of a run: every OTB directory in `data.sequences`, or a synthetic suite when
    there is none.
    """
    if config.data.sequences:
        sequences = []
        for directory in config.data.sequences:
            sequences.extend(load_otb_directory(directory, config.data.engine))
        return sequences

    return synthetic_suite(config.synth, count or config.data.synthetic_count, config.synth.seed, split)


@dataclass
class AblationRow:
    name: str
    checkpoint: str
    mode: str
    memory: bool
    background: bool
    top_k: int
    success_auc: float
    precision: float
    normalized_precision: float
    ao: float
    fps: float
    tags: dict[str, float] = field(default_factory=dict)


@dataclass
class OrderingCheck:
    name: str
    status: str
    detail: str


@dataclass
class AblationTable:
    rows: list[AblationRow]
    checks: list[OrderingCheck]

    def to_dict(self) -> dict[str, Any]:
        return {'rows': [asdict(row) for row in self.rows], 'checks': [asdict(check) for check in self.checks]}

    def save(self, directory: str) -> str:
        path = Storage.join(directory, 'ablation.json')
        Storage.save_text(path, JSONSerializer.serialize(self.to_dict(), primitives=True, indent=2))
        return path


def run_configuration(
    container: dict[str, Any],
    config: RunConfig,
    sequences: SequenceType[Sequence],
    memory: MemoryConfig,
    top_k: int | None = None,
) -> tuple[EvalReport, float]:
    """
    Function to track and evaluate `sequences` with the checkpoint network under one memory configuration and
    number of candidates.
    """
    network = network_from_checkpoint(container, seed=config.seed, memory=memory)
    tracker = Tracker(network, replace(config.tracker, top_k=top_k), config.data)
    results, fps = track_sequences(tracker, sequences, config.workers)

    predictions = {name: np.array([item.box.as_array() for item in items]) for name, items in results.items()}
    ground_truth = {sequence.name: sequence.ground_truth() for sequence in sequences}
    tags = {sequence.name: sequence.tag for sequence in sequences}

    return evaluate(predictions, ground_truth, config.eval, tags), fps


def _row(name: str, checkpoint: str, mode: str, memory: MemoryConfig, top_k: int, report: EvalReport,
         fps: float) -> AblationRow:
    mean = report.mean
    row = AblationRow(
        name=name,
        checkpoint=checkpoint,
        mode=mode,
        memory=memory.enabled,
        background=memory.background,
        top_k=top_k,
        success_auc=mean['success_auc'],
        precision=mean['precision'],
        normalized_precision=mean['normalized_precision'],
        ao=mean['ao'],
        fps=fps,
        tags={tag: values['success_auc'] for tag, values in report.tags.items()},
    )
    logging.info(f"{name}: AUC {row.success_auc:.3f}, {fps:.1f} FPS.")
    return row


def _mean_auc(rows: Iterable[AblationRow]) -> float | None:
    values = [row.success_auc for row in rows]
    return float(np.mean(values)) if values else None


def ordering_checks(rows: list[AblationRow], margin: float = ORDER_MARGIN) -> list[OrderingCheck]:
    """
    Function to check the expected orderings over the mean of the checkpoints of each mode:
    memory on beats memory off, voting beats topk_mlp beats softmax by `margin`, and a larger number of candidates
    never lowers the AUC while lowering the FPS.
    """
    checks = []
    default = [row for row in rows if row.name.endswith(':default')]
    no_memory = [row for row in rows if row.name.endswith(':no_memory')]

    on, off = _mean_auc(default), _mean_auc(no_memory)
    if on is None or off is None:
        checks.append(OrderingCheck('memory_on_beats_off', 'skipped', "Missing memory on or off rows."))
    else:
        status = 'pass' if on > off else 'fail'
        checks.append(OrderingCheck('memory_on_beats_off', status, f"AUC {on:.4f} with memory, {off:.4f} without."))

    by_mode = {mode: _mean_auc(row for row in default if row.mode == mode) for mode in MODE_ORDER}
    if any(value is None for value in by_mode.values()):
        checks.append(OrderingCheck('mode_ordering', 'skipped', f"Modes available: "
                                    f"{sorted(mode for mode, value in by_mode.items() if value is not None)}."))
    else:
        values = [by_mode[mode] for mode in MODE_ORDER]
        status = 'pass' if all(a - b > margin for a, b in zip(values, values[1:])) else 'fail'
        detail = " > ".join(f"{mode} {by_mode[mode]:.4f}" for mode in MODE_ORDER)
        checks.append(OrderingCheck('mode_ordering', status, detail))

    sweep: dict[int, list[AblationRow]] = {}
    for row in rows:
        if ':k' in row.name:
            sweep.setdefault(row.top_k, []).append(row)

    if len(sweep) < 2:
        checks.append(OrderingCheck('k_sweep', 'skipped', "Fewer than two values of K."))
    else:
        ks = sorted(sweep)
        aucs = [_mean_auc(sweep[k]) for k in ks]
        fps = [float(np.mean([row.fps for row in sweep[k]])) for k in ks]
        ok = all(b >= a for a, b in zip(aucs, aucs[1:])) and all(b < a for a, b in zip(fps, fps[1:]))
        detail = ", ".join(f"K={k}: AUC {auc:.4f} at {rate:.1f} FPS" for k, auc, rate in zip(ks, aucs, fps))
        checks.append(OrderingCheck('k_sweep', 'pass' if ok else 'fail', detail))

    return checks


def ablate(
    checkpoints: SequenceType[str],
    config: RunConfig,
    sequences: SequenceType[Sequence],
    k_values: SequenceType[int] = K_VALUES,
) -> AblationTable:
    """
    Function to compare checkpoints with the memory on, off, and without background information, plus a sweep of
    the number of candidates for the modes that select candidates.
    """
    rows = []

    for path in checkpoints:
        container = load_checkpoint(path)
        mode = container['model']['mode']
        default_k = int(container['model']['top_k'])
        name = Storage.get_filename_from_path(path)

        variants = (
            ('default', config.memory),
            ('no_memory', replace(config.memory, enabled=False)),
            ('no_background', replace(config.memory, background=False)),
        )
        for label, memory in variants:
            report, fps = run_configuration(container, config, sequences, memory, default_k)
            rows.append(_row(f"{name}:{mode}:{label}", path, mode, memory, default_k, report, fps))

        if mode == 'softmax':
            continue

        for k in k_values:
            report, fps = run_configuration(container, config, sequences, config.memory, k)
            rows.append(_row(f"{name}:{mode}:k{k}", path, mode, config.memory, k, report, fps))

    return AblationTable(rows, ordering_checks(rows))


@dataclass
class BenchCell:
    capacity: int
    interval: int
    success_auc: float
    fps: float


def bench(
    checkpoint: str,
    config: RunConfig,
    sequences: SequenceType[Sequence],
    capacities: SequenceType[int] = (4, 8, 16, 32),
    intervals: SequenceType[int] = (5, 15, 30, 60),
) -> list[BenchCell]:
    """
    Function to evaluate a checkpoint over a grid of memory capacities and write intervals.
    """
    container = load_checkpoint(checkpoint)
    cells = []

    for capacity in capacities:
        for interval in intervals:
            memory = replace(config.memory, capacity=capacity, interval=interval)
            memory.validate()
            report, fps = run_configuration(container, config, sequences, memory)
            cells.append(BenchCell(capacity, interval, report.mean['success_auc'], fps))
            logging.info(f"Capacity {capacity}, interval {interval}: AUC {cells[-1].success_auc:.3f}, {fps:.1f} FPS.")

    return cells
