from __future__ import annotations

import pytest

from memvote import cli
from memvote.config import load_config, save_config
from memvote.exception import NumericFault
from memvote.serializer import JSONSerializer
from memvote.storage import Storage
from tests.conftest import tiny_config


@pytest.fixture(scope='module')
def trained(tmp_path_factory: pytest.TempPathFactory) -> tuple[str, str]:
    """
    Directory with a tiny configuration file and a checkpoint trained from it through the command line.
    """
    root = str(tmp_path_factory.mktemp('cli'))
    config_path = save_config(tiny_config(), Storage.join(root, 'config'))
    output = Storage.join(root, 'train')

    assert cli.main(['train', '--config', config_path, '--output', output]) == cli.EXIT_OK
    return config_path, output


class TestCommands:
    def test_train_outputs(self, trained: tuple[str, str]) -> None:
        config_path, output = trained

        for name in ('config.json', 'train_log.jsonl', 'checkpoint.json'):
            assert Storage.is_file(Storage.join(output, name))

        assert load_config(Storage.join(output, 'config.json')).output_dir == output
        assert len(list(Storage.read_lines(Storage.join(output, 'train_log.jsonl')))) == 2

    def test_resume_continues_the_step(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, output = trained
        checkpoint = Storage.join(output, 'checkpoint.json')

        code = cli.main(['train', '--config', config_path, '--output', str(tmp_path), '--resume', checkpoint,
                         '--set', 'train.iterations=3'])

        assert code == cli.EXIT_OK
        lines = [JSONSerializer.deserialize(line) for line in Storage.read_lines(str(tmp_path / 'train_log.jsonl'))]
        assert [line['iteration'] for line in lines] == [2]

    def test_track_then_eval(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, output = trained
        track_output = str(tmp_path / 'track')

        code = cli.main(['track', '--config', config_path, '--output', track_output,
                         '--checkpoint', Storage.join(output, 'checkpoint.json')])
        assert code == cli.EXIT_OK

        predictions = Storage.join(track_output, 'predictions')
        assert sorted(Storage.list_files(predictions, '*.txt')) == ['drift_001.txt', 'plain_000.txt']

        eval_output = str(tmp_path / 'eval')
        code = cli.main(['eval', '--config', config_path, '--output', eval_output, '--predictions', predictions,
                         '--set', 'eval.plots=true'])
        assert code == cli.EXIT_OK

        report = JSONSerializer.deserialize(Storage.read_text(Storage.join(eval_output, 'report.json')))
        assert report['mean']['sequences'] == 2
        assert 0.0 <= report['mean']['success_auc'] <= 1.0
        assert Storage.is_file(Storage.join(eval_output, 'success_plot.png'))

    def test_bench(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, output = trained

        code = cli.main(['bench', '--config', config_path, '--output', str(tmp_path),
                         '--checkpoint', Storage.join(output, 'checkpoint.json'),
                         '--capacities', '2', '4', '--intervals', '1'])

        assert code == cli.EXIT_OK
        data = JSONSerializer.deserialize(Storage.read_text(str(tmp_path / 'bench.json')))
        assert [(cell['capacity'], cell['interval']) for cell in data['cells']] == [(2, 1), (4, 1)]
        assert 'logical_cores' in data['system']

    def test_ablate(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, output = trained

        code = cli.main(['ablate', '--config', config_path, '--output', str(tmp_path),
                         '--checkpoints', Storage.join(output, 'checkpoint.json'), '--k', '1'])

        assert code == cli.EXIT_OK
        data = JSONSerializer.deserialize(Storage.read_text(str(tmp_path / 'ablation.json')))
        assert len(data['rows']) == 4
        assert [check['name'] for check in data['checks']] == ['memory_on_beats_off', 'mode_ordering', 'k_sweep']


class TestExitCodes:
    @pytest.mark.parametrize('argv', [
        [],
        ['fly'],
        ['track'],
        ['train', '--workers', 'many'],
    ])
    def test_usage_errors(self, argv: list[str]) -> None:
        assert cli.main(argv) == cli.EXIT_USAGE

    def test_unknown_configuration_key(self, tmp_path: object) -> None:
        assert cli.main(['train', '--output', str(tmp_path), '--set', 'model.depth=3']) == cli.EXIT_USAGE

    def test_missing_configuration_file(self, tmp_path: object) -> None:
        code = cli.main(['train', '--output', str(tmp_path), '--config', str(tmp_path / 'missing.json')])
        assert code == cli.EXIT_USAGE

    def test_missing_checkpoint(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, _ = trained
        code = cli.main(['track', '--config', config_path, '--output', str(tmp_path),
                         '--checkpoint', str(tmp_path / 'missing.json')])

        assert code == cli.EXIT_DATA

    def test_missing_predictions(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, _ = trained
        code = cli.main(['eval', '--config', config_path, '--output', str(tmp_path / 'out'),
                         '--predictions', str(tmp_path / 'none')])

        assert code == cli.EXIT_DATA

    def test_missing_sequences(self, trained: tuple[str, str], tmp_path: object) -> None:
        config_path, output = trained
        code = cli.main(['track', '--config', config_path, '--output', str(tmp_path / 'out'),
                         '--checkpoint', Storage.join(output, 'checkpoint.json'),
                         '--sequences', str(tmp_path / 'empty')])

        assert code == cli.EXIT_DATA

    def test_numeric_fault(self, monkeypatch: pytest.MonkeyPatch, tmp_path: object) -> None:
        def diverge(*args: object) -> str:
            raise NumericFault("Loss is not finite.")

        monkeypatch.setattr(cli, 'cmd_train', diverge)
        assert cli.main(['train', '--output', str(tmp_path)]) == cli.EXIT_NUMERIC
