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
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Iterable, Type, TypeVar, get_type_hints

from .exception import ImproperlyConfigured, SerializerError
from .serializer import JSONSerializer
from .storage import Storage

__all__ = [
    'AnchorConfig',
    'AugmentConfig',
    'DataConfig',
    'EvalConfig',
    'MemoryConfig',
    'ModelConfig',
    'RunConfig',
    'SynthConfig',
    'TrackerConfig',
    'TrainConfig',
    'apply_overrides',
    'from_dict',
    'load_config',
    'save_config',
]

Config = TypeVar('Config')

RETRIEVAL_MODES: tuple[str, ...] = ('voting', 'softmax', 'topk_mlp')


@dataclass
class ModelConfig:
    """
    Network sizes. The backbone has four stride-2 stages, so the feature stride is always 16.
    """

    search_size: int = 256
    widths: tuple[int, ...] = (16, 32, 32, 64)
    key_channels: int = 64
    value_channels: int = 64
    value_hidden: int = 64
    head_width: int = 64
    mode: str = 'voting'
    top_k: int = 4
    heads: int = 8
    attention_width: int = 64
    mlp_hidden: int = 64
    score_gate: bool = True
    score_prior: float = 0.01
    dtype: str = 'float32'

    def validate(self) -> None:
        if self.search_size <= 0 or self.search_size % 16:
            raise ImproperlyConfigured(f"model.search_size must be a positive multiple of 16, not {self.search_size}.")
        if len(self.widths) != 4 or any(width <= 0 for width in self.widths):
            raise ImproperlyConfigured(f"model.widths must hold four positive widths, not {self.widths}.")
        if self.key_channels < 2 or self.value_channels <= 0:
            raise ImproperlyConfigured("model.key_channels must be at least 2 and model.value_channels positive.")
        if self.mode not in RETRIEVAL_MODES:
            raise ImproperlyConfigured(f"model.mode must be one of {RETRIEVAL_MODES}, not {self.mode!r}.")
        if self.top_k < 1:
            raise ImproperlyConfigured(f"model.top_k must be at least 1, not {self.top_k}.")
        if self.attention_width % self.heads:
            raise ImproperlyConfigured(f"model.heads ({self.heads}) must divide model.attention_width "
                                       f"({self.attention_width}).")
        if not 0 < self.score_prior < 1:
            raise ImproperlyConfigured("model.score_prior must be inside (0, 1).")
        if self.dtype not in ('float32', 'float64'):
            raise ImproperlyConfigured(f"model.dtype must be float32 or float64, not {self.dtype!r}.")


@dataclass
class AnchorConfig:
    """
    Anchor priors. Ratios are height over width, all anchors share the area `scale`², and `scale` defaults to a
    quarter of the search size.
    """

    ratios: tuple[float, ...] = (1 / 3, 1 / 2, 1.0, 2.0, 3.0)
    scale: float | None = None
    pos_threshold: float = 0.6
    neg_threshold: float = 0.3

    def validate(self) -> None:
        if not self.ratios or any(ratio <= 0 for ratio in self.ratios):
            raise ImproperlyConfigured("anchors.ratios must hold at least one positive ratio.")
        if self.scale is not None and self.scale <= 0:
            raise ImproperlyConfigured("anchors.scale must be positive.")
        if not 0 <= self.neg_threshold < self.pos_threshold <= 1:
            raise ImproperlyConfigured("anchors thresholds must satisfy 0 <= neg_threshold < pos_threshold <= 1.")


@dataclass
class MemoryConfig:
    """
    Inference-time write policy and value encoding switches.
    """

    capacity: int = 32
    interval: int = 30
    threshold: float = 0.7
    enabled: bool = True
    training_writes: str = 'always'
    background: bool = True
    score_floor: float = 0.5

    def validate(self) -> None:
        # Slot 0 is never evicted, a write needs one more slot.
        if self.capacity < 2 or self.interval < 0:
            raise ImproperlyConfigured("memory.capacity must be at least 2 and memory.interval non negative.")
        if self.training_writes not in ('always', 'policy'):
            raise ImproperlyConfigured("memory.training_writes must be 'always' or 'policy'.")


@dataclass
class DataConfig:
    context_factor: float = 2.0
    max_skip: int = 100
    center_jitter: float = 0.1
    engine: str = 'opencv'
    sequences: list[str] = field(default_factory=list)
    synthetic_count: int = 16

    def validate(self) -> None:
        if self.context_factor <= 0 or self.max_skip < 1 or self.center_jitter < 0:
            raise ImproperlyConfigured("data.context_factor and data.max_skip must be positive, "
                                       "data.center_jitter non negative.")


@dataclass
class AugmentConfig:
    """
    Probability of each augmentation, plus its strength.
    """

    flip: float = 0.25
    stretch: float = 0.5
    stretch_range: float = 0.1
    blur: float = 0.2
    blur_sigma: float = 1.5
    gray: float = 0.1

    def validate(self) -> None:
        for name in ('flip', 'stretch', 'blur', 'gray'):
            if not 0 <= getattr(self, name) <= 1:
                raise ImproperlyConfigured(f"augment.{name} is a probability and must be inside [0, 1].")
        if not 0 <= self.stretch_range < 1:
            raise ImproperlyConfigured("augment.stretch_range must be inside [0, 1).")


@dataclass
class SynthConfig:
    """
    Parameters of one synthetic sequence. The seed fully determines the rendered frames.
    """

    width: int = 320
    height: int = 240
    length: int = 60
    target_size: tuple[float, float] = (40.0, 32.0)
    shape: str = 'rectangle'
    stripes: int = 3
    velocity: tuple[float, float] = (1.5, 0.8)
    motion_noise: float = 0.5
    scale_drift: float = 0.0
    appearance_drift: float = 0.0
    distractors: int = 2
    distractor_similarity: float = 0.5
    occlusions: list[tuple[int, int]] = field(default_factory=list)
    background_noise: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        if self.width < 32 or self.height < 32 or self.length < 2:
            raise ImproperlyConfigured("synth canvas must be at least 32x32 and length at least 2.")
        if self.target_size[0] <= 0 or self.target_size[1] <= 0:
            raise ImproperlyConfigured("synth.target_size must be positive.")
        if self.shape not in ('rectangle', 'ellipse'):
            raise ImproperlyConfigured("synth.shape must be 'rectangle' or 'ellipse'.")
        if not 0 <= self.distractor_similarity <= 1:
            raise ImproperlyConfigured("synth.distractor_similarity must be inside [0, 1].")
        for occlusion in self.occlusions:
            if len(occlusion) != 2 or occlusion[0] > occlusion[1]:
                raise ImproperlyConfigured(f"synth.occlusions entries must be [start, end], not {occlusion}.")


@dataclass
class TrainConfig:
    """
    Optimization schedule. `steps_per_decay` and `curriculum_every` default to a fifth of the iterations.
    """

    iterations: int = 2000
    batch_size: int = 4
    lr: float = 1e-3
    lr_decay: float = 0.05
    steps_per_decay: int | None = None
    momentum: float = 0.9
    weight_decay: float = 5e-4
    loss_weight: float = 1.0
    curriculum_start: int = 2
    curriculum_end: int = 5
    curriculum_every: int | None = None
    checkpoint_every: int = 500

    def validate(self) -> None:
        if self.iterations < 1 or self.batch_size < 1:
            raise ImproperlyConfigured("train.iterations and train.batch_size must be positive.")
        if self.lr < 0 or not 0 < self.lr_decay <= 1 or self.momentum < 0 or self.weight_decay < 0:
            raise ImproperlyConfigured("train rates must be positive.")
        if not 2 <= self.curriculum_start <= self.curriculum_end:
            raise ImproperlyConfigured("train curriculum must satisfy 2 <= curriculum_start <= curriculum_end.")

    @property
    def decay_steps(self) -> int:
        return self.steps_per_decay or max(1, self.iterations // 5)

    @property
    def curriculum_steps(self) -> int:
        return self.curriculum_every or max(1, self.iterations // 5)


@dataclass
class TrackerConfig:
    """
    Options of online tracking. Scores are multiplied by `(1 - window_weight) + window_weight * window`, with the
    window the outer product of two Hanning windows over the score grid.
    """

    window_weight: float = 0.3
    top_k: int | None = None
    min_size: float = 4.0

    def validate(self) -> None:
        if not 0 <= self.window_weight <= 1:
            raise ImproperlyConfigured("tracker.window_weight must be inside [0, 1].")
        if self.top_k is not None and self.top_k < 1:
            raise ImproperlyConfigured("tracker.top_k must be at least 1.")


@dataclass
class EvalConfig:
    precision_at: float = 20.0
    precision_max: int = 50
    normalized_max: float = 0.5
    normalized_points: int = 51
    plots: bool = False

    def validate(self) -> None:
        if self.precision_max < 1 or self.normalized_points < 2:
            raise ImproperlyConfigured("eval curves need at least two samples.")


@dataclass
class RunConfig:
    """
    Root of the configuration. Every subcommand echoes it to `<output_dir>/config.json`.
    """

    seed: int = 0
    output_dir: str = 'runs/default'
    workers: int = 1
    model: ModelConfig = field(default_factory=ModelConfig)
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    data: DataConfig = field(default_factory=DataConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if is_dataclass(value):
                value.validate()

        if self.workers < 0:
            raise ImproperlyConfigured("workers must be zero (automatic) or positive.")


def _convert(value: Any, hint: Any, path: str) -> Any:
    """
    Function to convert a plain value read from json to the type hinted in a dataclass field.
    """
    if isinstance(hint, type) and is_dataclass(hint):
        if not isinstance(value, dict):
            raise ImproperlyConfigured(f"Configuration {path} must be an object, not {type(value).__name__}.")
        return from_dict(hint, value, path)

    text = str(hint)

    if value is None:
        if 'None' not in text:
            raise ImproperlyConfigured(f"Configuration {path} can't be null.")
        return None

    if text.startswith('tuple'):
        if not isinstance(value, (list, tuple)):
            raise ImproperlyConfigured(f"Configuration {path} must be a list.")
        return tuple(value)

    if text.startswith('list'):
        if not isinstance(value, (list, tuple)):
            raise ImproperlyConfigured(f"Configuration {path} must be a list.")
        return [tuple(item) if isinstance(item, list) else item for item in value]

    if hint is bool or text == 'bool':
        if not isinstance(value, bool):
            raise ImproperlyConfigured(f"Configuration {path} must be a boolean, not {value!r}.")
        return value

    if hint is int or text.startswith('int'):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ImproperlyConfigured(f"Configuration {path} must be an integer, not {value!r}.")
        return int(value)

    if hint is float or text.startswith('float'):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ImproperlyConfigured(f"Configuration {path} must be a number, not {value!r}.")
        return float(value)

    if hint is str or text == 'str':
        if not isinstance(value, str):
            raise ImproperlyConfigured(f"Configuration {path} must be a string, not {value!r}.")
        return value

    return value


def from_dict(config_class: Type[Config], data: dict[str, Any], path: str = '') -> Config:
    """
    Function to build a configuration dataclass from a dictionary, rejecting unknown keys.
    """
    hints = get_type_hints(config_class)
    known = {item.name for item in fields(config_class)}
    unknown = sorted(set(data) - known)

    if unknown:
        location = f" in {path}" if path else ""
        raise ImproperlyConfigured(f"Unknown configuration key(s){location}: {', '.join(unknown)}.")

    values = {
        name: _convert(value, hints[name], f"{path}.{name}" if path else name)
        for name, value in data.items()
    }
    return config_class(**values)


def _parse_literal(text: str) -> Any:
    try:
        return JSONSerializer.deserialize(text)
    except SerializerError:
        return text


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """
    Function to apply dotted `key=value` overrides. Values are read as json literals falling back to strings.
    """
    data = asdict(config)

    for override in overrides:
        if '=' not in override:
            raise ImproperlyConfigured(f"Override {override!r} must have the form key=value.")

        key, text = override.split('=', 1)
        parts = key.strip().split('.')
        target = data

        for part in parts[:-1]:
            if not isinstance(target.get(part), dict):
                raise ImproperlyConfigured(f"Unknown configuration key: {key}.")
            target = target[part]

        if parts[-1] not in target:
            raise ImproperlyConfigured(f"Unknown configuration key: {key}.")

        target[parts[-1]] = _parse_literal(text)
        logging.debug(f"Configuration override {key} = {target[parts[-1]]!r}.")

    result = from_dict(RunConfig, data)
    result.validate()
    return result


def load_config(path: str | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Function to read a json configuration file, when informed, and apply the overrides over it.
    """
    config = RunConfig()

    if path:
        if not Storage.exists(path):
            raise ImproperlyConfigured(f"Configuration file {path} does not exist.")

        try:
            data = JSONSerializer.deserialize(Storage.read_text(path))
        except SerializerError as e:
            raise ImproperlyConfigured(f"Configuration file {path} is not valid json: {e}") from e

        if not isinstance(data, dict):
            raise ImproperlyConfigured(f"Configuration file {path} must hold a json object.")

        config = from_dict(RunConfig, data)

    config = apply_overrides(config, overrides)
    return config


def save_config(config: RunConfig, directory: str) -> str:
    """
    Function to echo the effective configuration into `directory`, returning the file path.
    """
    Storage.create_directory(directory)
    path = Storage.join(directory, 'config.json')
    Storage.save_text(path, JSONSerializer.serialize(asdict(config), primitives=True, indent=2))
    return path
