from __future__ import annotations

import pytest

from memvote.config import (
    AnchorConfig,
    MemoryConfig,
    ModelConfig,
    RunConfig,
    SynthConfig,
    apply_overrides,
    from_dict,
    load_config,
    save_config,
)
from memvote.exception import ImproperlyConfigured
from memvote.storage import Storage


class TestDefaults:
    def test_defaults_are_valid(self) -> None:
        config = RunConfig()
        config.validate()

        assert config.model.search_size == 256
        assert config.model.mode == 'voting'
        assert config.anchors.ratios == pytest.approx((1 / 3, 1 / 2, 1.0, 2.0, 3.0))
        assert config.tracker.window_weight == 0.3
        assert config.data.context_factor == 2.0

    def test_schedule_defaults_follow_the_iterations(self) -> None:
        config = RunConfig()
        config.train.iterations = 100

        assert config.train.decay_steps == 20
        assert config.train.curriculum_steps == 20

    @pytest.mark.parametrize('config', [
        ModelConfig(search_size=100),
        ModelConfig(mode='attention'),
        ModelConfig(heads=3, attention_width=8),
        ModelConfig(top_k=0),
        ModelConfig(dtype='float16'),
        AnchorConfig(neg_threshold=0.7, pos_threshold=0.6),
        MemoryConfig(capacity=1),
        MemoryConfig(interval=-1),
        SynthConfig(occlusions=[(5, 2)]),
    ])
    def test_invalid_sections(self, config: object) -> None:
        with pytest.raises(ImproperlyConfigured):
            config.validate()


class TestOverrides:
    def test_dotted_keys_and_json_values(self) -> None:
        config = apply_overrides(RunConfig(), [
            'model.top_k=2',
            'model.mode=softmax',
            'anchors.ratios=[1.0, 2.0]',
            'anchors.scale=48',
            'synth.occlusions=[[3, 5]]',
            'memory.enabled=false',
            'seed=11',
        ])

        assert config.model.top_k == 2
        assert config.model.mode == 'softmax'
        assert config.anchors.ratios == (1.0, 2.0)
        assert config.anchors.scale == 48.0
        assert config.synth.occlusions == [(3, 5)]
        assert config.memory.enabled is False
        assert config.seed == 11

    def test_null_for_optional_values(self) -> None:
        config = apply_overrides(RunConfig(), ['anchors.scale=32', 'anchors.scale=null'])
        assert config.anchors.scale is None

    @pytest.mark.parametrize('override', ['model.depth=3', 'models.top_k=2', 'seed.value=1', 'top_k'])
    def test_unknown_keys(self, override: str) -> None:
        with pytest.raises(ImproperlyConfigured):
            apply_overrides(RunConfig(), [override])

    @pytest.mark.parametrize('override', ['model.top_k=1.5', 'model.top_k=true', 'memory.enabled=1',
                                          'model.search_size=72', 'model.widths=3'])
    def test_invalid_values(self, override: str) -> None:
        with pytest.raises(ImproperlyConfigured):
            apply_overrides(RunConfig(), [override])

    def test_overrides_leave_the_source_untouched(self) -> None:
        source = RunConfig()
        apply_overrides(source, ['model.top_k=9'])

        assert source.model.top_k == 4


class TestFromDict:
    def test_nested_sections(self) -> None:
        config = from_dict(RunConfig, {'model': {'widths': [4, 4, 8, 8]}, 'tracker': {'top_k': None}})

        assert config.model.widths == (4, 4, 8, 8)
        assert config.tracker.top_k is None

    def test_unknown_keys_are_named(self) -> None:
        with pytest.raises(ImproperlyConfigured) as error:
            from_dict(RunConfig, {'model': {'depth': 3}})

        assert 'model' in str(error.value) and 'depth' in str(error.value)

    def test_section_must_be_an_object(self) -> None:
        with pytest.raises(ImproperlyConfigured):
            from_dict(RunConfig, {'model': 3})


class TestFiles:
    def test_save_and_load(self, tmp_path: object) -> None:
        config = apply_overrides(RunConfig(), ['model.top_k=2', 'synth.occlusions=[[1, 2]]', 'anchors.scale=40'])

        path = save_config(config, str(tmp_path / 'run'))
        loaded = load_config(path)

        assert Storage.get_filename_from_path(path) == 'config.json'
        assert loaded == config

    def test_overrides_apply_over_the_file(self, tmp_path: object) -> None:
        path = save_config(apply_overrides(RunConfig(), ['model.top_k=2']), str(tmp_path))
        assert load_config(path, ['model.top_k=5']).model.top_k == 5

    def test_without_a_file(self) -> None:
        assert load_config(None, ['seed=4']).seed == 4

    def test_missing_file(self, tmp_path: object) -> None:
        with pytest.raises(ImproperlyConfigured):
            load_config(str(tmp_path / 'missing.json'))

    @pytest.mark.parametrize('content', ['{"model": ', '[1, 2]'])
    def test_invalid_file(self, tmp_path: object, content: str) -> None:
        path = str(tmp_path / 'config.json')
        Storage.save_text(path, content)

        with pytest.raises(ImproperlyConfigured):
            load_config(path)
