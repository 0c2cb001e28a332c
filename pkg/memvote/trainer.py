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
from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np
from numpy import ndarray

from .backbone import Normalizer
from .config import AnchorConfig, MemoryConfig, ModelConfig, RunConfig, from_dict
from .data import Sequence, TrainingClip, sample_training_clip
from .exception import CheckpointError, ContractViolation, NumericFault, SerializerError
from .handler import System
from .loss import LossReport, frame_loss, total_loss
from .memory import VALUE_LAYOUT
from .model import TrackerNetwork
from .numerics import RandomStreams, Tape
from .pipelines.augmenter import augmentation_pipeline
from .serializer import JSONSerializer
from .storage import Storage

__all__ = [
    'CHECKPOINT_FORMAT',
    'CHECKPOINT_VERSION',
    'StepReport',
    'Trainer',
    'load_checkpoint',
    'network_from_checkpoint',
]

CHECKPOINT_FORMAT: str = 'memvote-checkpoint'
CHECKPOINT_VERSION: int = 1

CHECKPOINT_KEYS: tuple[str, ...] = (
    'format', 'version', 'parameters', 'optimizer', 'normalization', 'anchors', 'model', 'memory', 'value_layout',
    'rng_state', 'step',
)


@dataclass(frozen=True)
class StepReport:
    """
    Summary of one optimization step, written as one line of the training log.
    """

    iteration: int
    lr: float
    center_loss: float
    box_loss: float
    total: float
    positives: int
    negatives: int
    clip_length: int
    skipped: bool
    seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def load_checkpoint(path: str) -> dict[str, Any]:
    """
    Function to read and validate a checkpoint container.
    """
    if not Storage.is_file(path):
        raise CheckpointError(f"Checkpoint {path} does not exist.")

    try:
        container = JSONSerializer.deserialize(Storage.read_text(path))
    except (SerializerError, UnicodeDecodeError) as error:
        raise CheckpointError(f"Checkpoint {path} is corrupt: {error}") from error

    if not isinstance(container, dict) or container.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f"File {path} is not a checkpoint.")

    if container.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError(f"Checkpoint {path} has version {container.get('version')}, "
                              f"only version {CHECKPOINT_VERSION} is supported.")

    missing = [key for key in CHECKPOINT_KEYS if key not in container]
    if missing:
        raise CheckpointError(f"Checkpoint {path} is missing {', '.join(missing)}.")

    if list(container['value_layout']) != list(VALUE_LAYOUT):
        raise CheckpointError(f"Checkpoint {path} encodes values as {container['value_layout']}, "
                              f"not {list(VALUE_LAYOUT)}.")

    return container


def network_from_checkpoint(container: dict[str, Any], seed: int = 0, memory: MemoryConfig | None = None) -> TrackerNetwork:
    """
    Function to rebuild the network stored in a checkpoint container. `memory` replaces the stored memory
    configuration, which only changes the write policy and the value encoding switches.
    """
    model = from_dict(ModelConfig, container['model'], 'model')
    anchors = from_dict(AnchorConfig, container['anchors'], 'anchors')
    memory = memory or from_dict(MemoryConfig, container['memory'], 'memory')
    normalizer = Normalizer(**container['normalization'])

    network = TrackerNetwork(model, anchors, memory, seed=seed, normalizer=normalizer)
    network.load_state_dict({name: np.asarray(value) for name, value in container['parameters'].items()})

    return network


class Trainer:
    """
    Class that trains a TrackerNetwork end to end over clips sampled from a set of sequences. Each clip is rolled
    like the tracker does: the initial frame is written from its ground truth, then every instance frame retrieves,
    predicts, adds its loss and writes its prediction to the memory. Gradients flow through the memory writes.
    """

    log_name: str = 'train_log.jsonl'
    """
    Attribute with the file name of the training log inside the output directory.
    """
    sampling_attempts: int = 20
    """
    Attribute with the number of sequences tried for one batch item before giving up.
    """

    def __init__(self, config: RunConfig, sequences: list[Sequence], network: TrackerNetwork | None = None) -> None:
        if not sequences:
            raise ContractViolation("Training requires at least one sequence.")

        self.config = config
        self.sequences = sequences

        if network is None:
            normalizer = Normalizer.from_frames(sequence.frame(0) for sequence in sequences)
            network = TrackerNetwork.from_config(config, normalizer)

        self.network = network
        self.streams = RandomStreams(config.seed)
        self.pipeline = augmentation_pipeline(config.augment)
        self.step = 0
        self.lr_scale = 1.0
        self.velocity: dict[str, ndarray] = {
            name: np.zeros_like(parameter.data) for name, parameter in self.network.named_parameters()
        }

    def learning_rate(self, step: int | None = None) -> float:
        """
        Method to obtain lr0 decay^(step / decay_steps), scaled down by every recovered numeric fault.
        """
        train = self.config.train
        step = self.step if step is None else step
        return train.lr * train.lr_decay ** (step / train.decay_steps) * self.lr_scale

    def clip_length(self, step: int | None = None) -> int:
        """
        Method to obtain the curriculum clip length, growing by one every `curriculum_steps` steps.
        """
        train = self.config.train
        step = self.step if step is None else step
        return min(train.curriculum_end, train.curriculum_start + step // train.curriculum_steps)

    def sample_batch(self, step: int | None = None) -> list[TrainingClip]:
        """
        Method to sample the batch of `step`. The random stream depends only on the seed and the step, so a resumed
        run samples the same batches.
        """
        step = self.step if step is None else step
        rng = self.streams.stream('train', step)
        length = self.clip_length(step)
        batch = []

        for _ in range(self.config.train.batch_size):
            for _ in range(self.sampling_attempts):
                sequence = self.sequences[int(rng.integers(0, len(self.sequences)))]
                clip = sample_training_clip(
                    sequence,
                    length,
                    rng,
                    self.network.grid,
                    self.config.anchors,
                    self.config.data,
                    search_size=self.network.search_size,
                    pipeline=self.pipeline,
                )
                if clip is not None:
                    batch.append(clip)
                    break

        if not batch:
            raise ContractViolation(f"No sequence is long enough for clips of {length} frames.")

        return batch

    def clip_loss(self, clip: TrainingClip) -> tuple[Any, LossReport]:
        """
        Method to roll the network over a clip, returning the weighted loss tensor and its report.
        """
        network = self.network
        initial = clip.initial

        memory = network.start_memory(network.extract(initial.crop), initial.box, training=True)
        frames = []

        for frame in clip.instances:
            query = network.extract(frame.crop)
            prediction = network(query, memory)
            frames.append(frame_loss(frame.labels, prediction))
            memory, _ = network.write(memory, frame.frame_index - initial.frame_index, query, prediction)

        return total_loss(frames, self.config.train.loss_weight)

    def clip_gradients(self, clip: TrainingClip) -> tuple[dict[str, ndarray], LossReport]:
        """
        Method to obtain the gradient of the clip loss with respect to every parameter.
        """
        parameters = list(self.network.named_parameters())

        with Tape() as tape:
            loss, report = self.clip_loss(clip)

        gradients = tape.backward(loss, wrt=[parameter for _, parameter in parameters])

        return {name: gradients.of(parameter) for name, parameter in parameters}, report

    def compute_gradients(self, batch: list[TrainingClip]) -> tuple[dict[str, ndarray], list[LossReport]]:
        """
        Method to sum the gradients of every clip of the batch. Clips run on `workers` threads; the sum is done in
        batch order.
        """
        workers = System.get_worker_count(self.config.workers)
        results = System.map(self.clip_gradients, batch, workers=min(workers, len(batch)))

        total: dict[str, ndarray] = {}
        reports = []

        for gradients, report in results:
            reports.append(report)
            for name, gradient in gradients.items():
                total[name] = total[name] + gradient if name in total else gradient.copy()

        for name, gradient in total.items():
            if not np.all(np.isfinite(gradient)):
                raise NumericFault(f"Gradient of {name} is not finite.")

        return total, reports

    def apply_update(self, gradients: dict[str, ndarray], lr: float) -> None:
        """
        Method to apply SGD with momentum and weight decay: v = μ v + g + λ p, then p = p - lr v.
        """
        train = self.config.train

        for name, parameter in self.network.named_parameters():
            velocity = train.momentum * self.velocity[name] + gradients[name] + train.weight_decay * parameter.data
            self.velocity[name] = velocity.astype(parameter.data.dtype)
            parameter.assign(parameter.data - lr * velocity)

    def train_step(self, batch: list[TrainingClip] | None = None) -> StepReport:
        """
        Method to run one optimization step. A non finite loss or gradient skips the update and halves the learning
        rate for the rest of the run.
        """
        started = time.perf_counter()
        batch = batch if batch is not None else self.sample_batch()
        lr = self.learning_rate()
        length = len(batch[0])

        try:
            gradients, reports = self.compute_gradients(batch)
        except NumericFault as error:
            self.lr_scale *= 0.5
            logging.warning(f"Step {self.step} skipped after a numeric fault ({error}); "
                            f"learning rate scale is now {self.lr_scale}.")
            report = StepReport(self.step, lr, float('nan'), float('nan'), float('nan'), 0, 0, length, True)
            self.step += 1
            return report

        self.apply_update(gradients, lr)

        report = StepReport(
            iteration=self.step,
            lr=lr,
            center_loss=sum(item.center_loss for item in reports),
            box_loss=sum(item.box_loss for item in reports),
            total=sum(item.total for item in reports),
            positives=sum(item.positives for item in reports),
            negatives=sum(item.negatives for item in reports),
            clip_length=length,
            skipped=False,
            seconds=time.perf_counter() - started,
        )
        self.step += 1

        return report

    def train(
        self,
        iterations: int | None = None,
        output_dir: str | None = None,
        callback: Callable[[StepReport], None] | None = None,
    ) -> list[StepReport]:
        """
        Method to train until `iterations` steps were done in total, writing the log and periodic checkpoints to
        `output_dir` when informed.
        """
        iterations = self.config.train.iterations if iterations is None else iterations
        reports = []

        while self.step < iterations:
            report = self.train_step()
            reports.append(report)

            if output_dir:
                self.write_log(output_dir, report)

                every = self.config.train.checkpoint_every
                if every and self.step % every == 0:
                    self.checkpoint(Storage.join(output_dir, f"checkpoint_{self.step:06d}.json"))

            if callback is not None:
                callback(report)

        if output_dir:
            self.checkpoint(Storage.join(output_dir, 'checkpoint.json'))

        return reports

    def write_log(self, output_dir: str, report: StepReport) -> None:
        line = report.to_dict()
        # NaN is not valid json; skipped steps are flagged instead.
        for key in ('center_loss', 'box_loss', 'total'):
            if not np.isfinite(line[key]):
                line[key] = None

        Storage.append_line(Storage.join(output_dir, self.log_name), JSONSerializer.serialize(line, primitives=True))

    def state(self) -> dict[str, Any]:
        """
        Method to obtain the checkpoint container of the current training state.
        """
        network = self.network
        anchors = asdict(network.anchor_config)
        anchors['scale'] = network.grid.scale

        return {
            'format': CHECKPOINT_FORMAT,
            'version': CHECKPOINT_VERSION,
            'parameters': network.state_dict(),
            'optimizer': {
                'velocity': {name: value.copy() for name, value in self.velocity.items()},
                'lr_scale': self.lr_scale,
            },
            'normalization': network.normalizer.to_dict(),
            'anchors': anchors,
            'model': asdict(network.model_config),
            'memory': asdict(network.memory_config),
            'value_layout': list(VALUE_LAYOUT),
            'rng_state': {'seed': self.config.seed, 'step': self.step},
            'step': self.step,
        }

    def checkpoint(self, path: str) -> str:
        """
        Method to write the checkpoint container to `path`.
        """
        Storage.save_text(path, JSONSerializer.serialize(self.state()))
        logging.info(f"Checkpoint of step {self.step} written to {path}.")
        return path

    @classmethod
    def restore(cls, path: str, config: RunConfig, sequences: list[Sequence]) -> Trainer:
        """
        Method to resume training from a checkpoint. The stored network description wins over `config.model` and
        `config.anchors`; the learning rate schedule and the batch sampling continue from the stored step.
        """
        container = load_checkpoint(path)
        network = network_from_checkpoint(container, seed=config.seed, memory=config.memory)

        trainer = cls(config, sequences, network=network)
        trainer.step = int(container['step'])
        trainer.lr_scale = float(container['optimizer']['lr_scale'])

        velocity = container['optimizer']['velocity']
        if set(velocity) != set(trainer.velocity):
            raise CheckpointError(f"Checkpoint {path} optimizer state does not match the network.")

        for name, parameter in network.named_parameters():
            value = np.asarray(velocity[name], dtype=parameter.data.dtype)
            if value.shape != parameter.shape:
                raise CheckpointError(f"Checkpoint {path} velocity of {name} has shape {value.shape}.")
            trainer.velocity[name] = value

        if int(container['rng_state']['seed']) != config.seed:
            logging.warning(f"Checkpoint {path} was trained with seed {container['rng_state']['seed']}, "
                            f"resuming with seed {config.seed}.")

        return trainer
