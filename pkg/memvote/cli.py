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

import argparse
import logging
import sys
from dataclasses import asdict
from typing import Any, Sequence as SequenceType


from .config import RunConfig, load_config, save_config
from .data import Sequence, load_otb_directory
from .exception import (
    CheckpointError,
    ContractViolation,
    DataError,
    ImproperlyConfigured,
    NumericFault,
    SerializerError,
)
from .experiment import K_VALUES, ablate, bench, load_sequences
from .handler import System
from .metrics import EvalReport, evaluate
from .serializer import JSONSerializer
from .storage import Storage
from .tracker import Tracker, read_predictions, track_sequences, write_predictions
from .trainer import Trainer, load_checkpoint, network_from_checkpoint

__all__ = [
    'cmd_ablate',
    'cmd_bench',
    'cmd_eval',
    'cmd_track',
    'cmd_train',
    'main',
]

EXIT_OK: int = 0
EXIT_USAGE: int = 1
EXIT_DATA: int = 2
EXIT_NUMERIC: int = 3


class CommandParser(argparse.ArgumentParser):
    """
    Argument parser that reports usage errors as configuration errors instead of exiting.
    """

    def error(self, message: str) -> None:
        raise ImproperlyConfigured(f"{self.prog}: {message}")


def evaluation_sequences(config: RunConfig, directory: str | None = None) -> list[Sequence]:
    """
    Function to obtain the sequences to track or evaluate: an OTB directory when informed, otherwise the held out
    synthetic suite of the configuration.
    """
    if directory:
        return load_otb_directory(directory, config.data.engine)

    return load_sequences(config, split='eval')


def cmd_train(config: RunConfig, resume: str | None = None) -> str:
    """
    Function to train a network and write its checkpoint and training log to the output directory.
    """
    sequences = load_sequences(config, split='train')

    if resume:
        trainer = Trainer.restore(resume, config, sequences)
        logging.info(f"Resuming training from step {trainer.step}.")
    else:
        trainer = Trainer(config, sequences)

    logging.info(f"Training on {len(sequences)} sequences: {trainer.network.describe()}.")
    trainer.train(output_dir=config.output_dir)

    return Storage.join(config.output_dir, 'checkpoint.json')


def cmd_track(config: RunConfig, checkpoint: str, directory: str | None = None) -> list[str]:
    """
    Function to track sequences with a checkpoint, writing one prediction file per sequence.
    """
    container = load_checkpoint(checkpoint)
    network = network_from_checkpoint(container, seed=config.seed, memory=config.memory)
    sequences = evaluation_sequences(config, directory)

    tracker = Tracker(network, config.tracker, config.data)
    results, fps = track_sequences(tracker, sequences, config.workers)
    logging.info(f"Tracked {len(sequences)} sequences at {fps:.1f} FPS.")

    paths = []
    for name, items in results.items():
        path = Storage.join(config.output_dir, 'predictions', f"{name}.txt")
        write_predictions(path, items)
        paths.append(path)

    return paths


def cmd_eval(config: RunConfig, predictions: str, directory: str | None = None) -> EvalReport:
    """
    Function to evaluate a directory of prediction files against the ground truth and write the report.
    """
    files = list(Storage.list_files(predictions, '*.txt')) if Storage.is_dir(predictions) else []
    if not files:
        raise DataError(f"No prediction file in {predictions}.")

    sequences = {sequence.name: sequence for sequence in evaluation_sequences(config, directory)}
    boxes = {}

    for file in files:
        name = file[:-len('.txt')]
        if name not in sequences:
            raise DataError(f"Prediction {file} does not match any sequence.")

        _, predicted, _ = read_predictions(Storage.join(predictions, file))
        boxes[name] = predicted

    report = evaluate(
        boxes,
        {name: sequence.ground_truth() for name, sequence in sequences.items()},
        config.eval,
        {name: sequence.tag for name, sequence in sequences.items()},
    )
    path = report.save(config.output_dir, plots=config.eval.plots)
    logging.info(f"Mean success AUC {report.mean['success_auc']:.3f}; report written to {path}.")

    return report


def cmd_ablate(config: RunConfig, checkpoints: SequenceType[str], k_values: SequenceType[int] = K_VALUES,
               directory: str | None = None) -> dict[str, Any]:
    """
    Function to run the ablation table over a set of checkpoints.
    """
    table = ablate(checkpoints, config, evaluation_sequences(config, directory), k_values)
    table.save(config.output_dir)

    for check in table.checks:
        logging.info(f"{check.name}: {check.status} ({check.detail})")

    return table.to_dict()


def cmd_bench(config: RunConfig, checkpoint: str, capacities: SequenceType[int], intervals: SequenceType[int],
              directory: str | None = None) -> list[dict[str, Any]]:
    """
    Function to evaluate a checkpoint over the memory capacity and write interval grid.
    """
    cells = [asdict(cell) for cell in bench(checkpoint, config, evaluation_sequences(config, directory),
                                            capacities, intervals)]
    path = Storage.join(config.output_dir, 'bench.json')
    Storage.save_text(path, JSONSerializer.serialize({'cells': cells, 'system': System.describe()},
                                                     primitives=True, indent=2))
    return cells


def build_parser() -> CommandParser:
    parser = CommandParser(prog='memvote', description="Train, run and evaluate the memory-voting tracker.")
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=CommandParser)

    common = CommandParser(add_help=False)
    common.add_argument('--config', help="JSON configuration file.")
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help="Override one configuration key, like train.iterations=100.")
    common.add_argument('--seed', type=int, help="Root seed of every random stream.")
    common.add_argument('--output', help="Output directory.")
    common.add_argument('--workers', type=int, help="Threads used over sequences or clips; 0 is automatic.")
    common.add_argument('--verbose', action='store_true', help="Log debug messages.")

    train = subparsers.add_parser('train', parents=[common], help="Train a network.")
    train.add_argument('--resume', help="Checkpoint to resume training from.")

    track = subparsers.add_parser('track', parents=[common], help="Track sequences with a checkpoint.")
    track.add_argument('--checkpoint', required=True)
    track.add_argument('--sequences', help="OTB sequence directory; the synthetic evaluation suite by default.")

    evaluate_parser = subparsers.add_parser('eval', parents=[common], help="Evaluate prediction files.")
    evaluate_parser.add_argument('--predictions', required=True, help="Directory of prediction files.")
    evaluate_parser.add_argument('--sequences', help="OTB sequence directory with the ground truth.")

    ablate_parser = subparsers.add_parser('ablate', parents=[common], help="Compare checkpoints and settings.")
    ablate_parser.add_argument('--checkpoints', nargs='+', required=True)
    ablate_parser.add_argument('--k', dest='k_values', nargs='+', type=int, default=list(K_VALUES))
    ablate_parser.add_argument('--sequences')

    bench_parser = subparsers.add_parser('bench', parents=[common], help="Sweep memory capacity and interval.")
    bench_parser.add_argument('--checkpoint', required=True)
    bench_parser.add_argument('--capacities', nargs='+', type=int, default=[4, 8, 16, 32])
    bench_parser.add_argument('--intervals', nargs='+', type=int, default=[5, 15, 30, 60])
    bench_parser.add_argument('--sequences')

    return parser


def _overrides(arguments: argparse.Namespace) -> list[str]:
    overrides = list(arguments.overrides)

    if arguments.seed is not None:
        overrides.append(f"seed={arguments.seed}")
    if arguments.output is not None:
        overrides.append(f"output_dir={JSONSerializer.serialize(arguments.output)}")
    if arguments.workers is not None:
        overrides.append(f"workers={arguments.workers}")

    return overrides


def run(arguments: argparse.Namespace) -> None:
    config = load_config(arguments.config, _overrides(arguments))
    save_config(config, config.output_dir)

    if arguments.command == 'train':
        cmd_train(config, arguments.resume)
    elif arguments.command == 'track':
        cmd_track(config, arguments.checkpoint, arguments.sequences)
    elif arguments.command == 'eval':
        cmd_eval(config, arguments.predictions, arguments.sequences)
    elif arguments.command == 'ablate':
        cmd_ablate(config, arguments.checkpoints, arguments.k_values, arguments.sequences)
    elif arguments.command == 'bench':
        cmd_bench(config, arguments.checkpoint, arguments.capacities, arguments.intervals, arguments.sequences)


def main(argv: SequenceType[str] | None = None) -> int:
    """
    Entry point of the command line. Returns 0 on success, 1 for usage or configuration errors, 2 for data or
    checkpoint errors and 3 for numeric faults.
    """
    try:
        arguments = build_parser().parse_args(argv)
    except ImproperlyConfigured as error:
        logging.error(str(error))
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if arguments.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    try:
        run(arguments)
    except ImproperlyConfigured as error:
        logging.error(f"Configuration error: {error}")
        return EXIT_USAGE
    except (DataError, CheckpointError, ContractViolation, SerializerError) as error:
        logging.error(f"{type(error).__name__}: {error}")
        return EXIT_DATA
    except NumericFault as error:
        logging.error(f"Numeric fault: {error}")
        return EXIT_NUMERIC

    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
