from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from memvote.data import Sequence, generate_synthetic, synthetic_suite
from memvote.exception import CheckpointError, ContractViolation, NumericFault
from memvote.serializer import JSONSerializer
from memvote.storage import Storage
from memvote.trainer import (
    CHECKPOINT_FORMAT,
    Trainer,
    load_checkpoint,
    network_from_checkpoint,
)
from tests.conftest import tiny_config


def _sequences(config: object) -> list[Sequence]:
    return synthetic_suite(config.synth, 2, seed=config.synth.seed)


def _parameters(trainer: Trainer) -> dict[str, np.ndarray]:
    return {name: parameter.data.copy() for name, parameter in trainer.network.named_parameters()}


class TestSchedule:
    def setup_method(self) -> None:
        self.config = tiny_config()
        self.config.train = replace(self.config.train, iterations=10, steps_per_decay=5, curriculum_every=2)
        self.trainer = Trainer(self.config, _sequences(self.config))

    def test_learning_rate_decays(self) -> None:
        assert self.trainer.learning_rate(0) == pytest.approx(1e-3)
        assert self.trainer.learning_rate(5) == pytest.approx(1e-3 * 0.05)
        assert self.trainer.learning_rate(10) == pytest.approx(1e-3 * 0.05 ** 2)

    def test_clip_length_grows_until_the_end(self) -> None:
        assert [self.trainer.clip_length(step) for step in range(6)] == [2, 2, 3, 3, 3, 3]

    def test_batches_depend_on_the_seed_and_the_step(self) -> None:
        other = Trainer(self.config, _sequences(self.config))

        first = self.trainer.sample_batch(3)
        assert [clip.frame_indexes for clip in first] == [clip.frame_indexes for clip in other.sample_batch(3)]
        assert len(first) == self.config.train.batch_size
        assert len(first[0]) == 3

    def test_requires_sequences(self) -> None:
        with pytest.raises(ContractViolation):
            Trainer(self.config, [])

    def test_sequences_too_short(self) -> None:
        config = tiny_config()
        config.train = replace(config.train, curriculum_start=3, curriculum_end=3)
        short = generate_synthetic(replace(config.synth, length=2))

        with pytest.raises(ContractViolation):
            Trainer(config, [short]).sample_batch(0)


class TestTrainStep:
    def test_zero_learning_rate_keeps_the_parameters(self) -> None:
        config = tiny_config()
        config.train = replace(config.train, lr=0.0)
        trainer = Trainer(config, _sequences(config))
        before = _parameters(trainer)

        report = trainer.train_step()

        assert not report.skipped
        assert np.isfinite(report.total) and report.total > 0
        assert report.positives > 0 and report.negatives == report.positives
        assert trainer.step == 1
        assert all(np.array_equal(before[name], value) for name, value in _parameters(trainer).items())
        assert any(np.any(velocity != 0) for velocity in trainer.velocity.values())

    def test_step_updates_the_parameters(self) -> None:
        config = tiny_config()
        trainer = Trainer(config, _sequences(config))
        before = _parameters(trainer)

        trainer.train_step()

        assert any(not np.array_equal(before[name], value) for name, value in _parameters(trainer).items())

    def test_workers_do_not_change_the_gradients(self) -> None:
        config = tiny_config()
        config.train = replace(config.train, batch_size=2)
        trainer = Trainer(config, _sequences(config))
        batch = trainer.sample_batch(0)

        single, _ = trainer.compute_gradients(batch)
        trainer.config = replace(config, workers=2)
        threaded, _ = trainer.compute_gradients(batch)

        for name, gradient in single.items():
            np.testing.assert_allclose(threaded[name], gradient, rtol=1e-12, atol=1e-15)

    def test_batch_gradient_is_the_sum_of_the_clips(self) -> None:
        config = tiny_config()
        config.train = replace(config.train, batch_size=2)
        trainer = Trainer(config, _sequences(config))
        first, second = trainer.sample_batch(0)

        together, reports = trainer.compute_gradients([first, second])
        alone_first, _ = trainer.compute_gradients([first])
        alone_second, _ = trainer.compute_gradients([second])

        assert len(reports) == 2
        for name, gradient in together.items():
            np.testing.assert_allclose(gradient, alone_first[name] + alone_second[name], rtol=1e-12, atol=1e-15)

    def test_numeric_fault_skips_the_update(self, monkeypatch: pytest.MonkeyPatch, tmp_path: object) -> None:
        config = tiny_config()
        trainer = Trainer(config, _sequences(config))
        before = _parameters(trainer)

        def fault(batch: object) -> None:
            raise NumericFault("Gradient of head.weight is not finite.")

        monkeypatch.setattr(trainer, 'compute_gradients', fault)
        report = trainer.train_step()
        trainer.write_log(str(tmp_path), report)

        assert report.skipped
        assert trainer.lr_scale == 0.5
        assert trainer.learning_rate(0) == pytest.approx(0.5e-3)
        assert trainer.step == 1
        assert all(np.array_equal(before[name], value) for name, value in _parameters(trainer).items())

        line = JSONSerializer.deserialize(Storage.read_text(Storage.join(str(tmp_path), 'train_log.jsonl')))
        assert line['skipped'] is True
        assert line['total'] is None


class TestTrain:
    def test_log_and_checkpoints(self, tmp_path: object) -> None:
        config = tiny_config()
        config.train = replace(config.train, iterations=2, checkpoint_every=1)
        trainer = Trainer(config, _sequences(config))
        output = str(tmp_path)
        seen = []

        reports = trainer.train(output_dir=output, callback=seen.append)

        assert len(reports) == 2 and seen == reports
        lines = [JSONSerializer.deserialize(line) for line in Storage.read_lines(Storage.join(output, 'train_log.jsonl'))]
        assert [line['iteration'] for line in lines] == [0, 1]
        assert lines[0]['clip_length'] == 2

        for name in ('checkpoint.json', 'checkpoint_000001.json', 'checkpoint_000002.json'):
            assert Storage.is_file(Storage.join(output, name))

    def test_train_stops_at_the_total_iterations(self) -> None:
        config = tiny_config()
        trainer = Trainer(config, _sequences(config))
        trainer.step = 2

        assert trainer.train(iterations=2) == []


class TestCheckpoint:
    def setup_method(self) -> None:
        self.config = tiny_config()
        self.sequences = _sequences(self.config)
        self.trainer = Trainer(self.config, self.sequences)
        self.trainer.train_step()

    def test_network_round_trip(self, tmp_path: object, sequence: Sequence) -> None:
        path = self.trainer.checkpoint(str(tmp_path / 'checkpoint.json'))
        container = load_checkpoint(path)
        network = network_from_checkpoint(container)

        assert container['format'] == CHECKPOINT_FORMAT
        assert container['step'] == 1
        original = self.trainer.network.state_dict()
        restored = network.state_dict()
        assert all(np.array_equal(original[name], restored[name]) for name in original)
        np.testing.assert_array_equal(network.normalizer.mean, self.trainer.network.normalizer.mean)
        assert network.grid.scale == self.trainer.network.grid.scale

    def test_resume_matches_an_uninterrupted_run(self, tmp_path: object) -> None:
        path = self.trainer.checkpoint(str(tmp_path / 'checkpoint.json'))
        resumed = Trainer.restore(path, self.config, self.sequences)

        assert resumed.step == 1
        for name, velocity in self.trainer.velocity.items():
            np.testing.assert_array_equal(resumed.velocity[name], velocity)

        self.trainer.train_step()
        resumed.train_step()

        expected = _parameters(self.trainer)
        for name, value in _parameters(resumed).items():
            np.testing.assert_allclose(value, expected[name], rtol=1e-10, atol=1e-14)

    def test_missing(self, tmp_path: object) -> None:
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / 'missing.json'))

    def test_corrupt(self, tmp_path: object) -> None:
        path = str(tmp_path / 'checkpoint.json')
        Storage.save_text(path, '{"format": "memvote-checkpoint", "parameters": [')

        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    @pytest.mark.parametrize('change', [
        {'format': 'other'},
        {'version': 2},
        {'value_layout': ['score', 'box']},
    ])
    def test_unsupported_containers(self, tmp_path: object, change: dict) -> None:
        state = self.trainer.state()
        state.update(change)
        path = str(tmp_path / 'checkpoint.json')
        Storage.save_text(path, JSONSerializer.serialize(state))

        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_keys(self, tmp_path: object) -> None:
        state = self.trainer.state()
        state.pop('optimizer')
        path = str(tmp_path / 'checkpoint.json')
        Storage.save_text(path, JSONSerializer.serialize(state))

        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_mismatched_parameters(self, tmp_path: object) -> None:
        state = self.trainer.state()
        state['parameters'].pop(next(iter(state['parameters'])))
        path = str(tmp_path / 'checkpoint.json')
        Storage.save_text(path, JSONSerializer.serialize(state))

        with pytest.raises(CheckpointError):
            network_from_checkpoint(load_checkpoint(path))

    def test_mismatched_optimizer(self, tmp_path: object) -> None:
        state = self.trainer.state()
        state['optimizer']['velocity'].pop(next(iter(state['optimizer']['velocity'])))
        path = str(tmp_path / 'checkpoint.json')
        Storage.save_text(path, JSONSerializer.serialize(state))

        with pytest.raises(CheckpointError):
            Trainer.restore(path, self.config, self.sequences)
