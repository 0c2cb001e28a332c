from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from memvote.anchors import BBox
from memvote.config import (
    AugmentConfig,
    DataConfig,
    ModelConfig,
    RunConfig,
    SynthConfig,
    TrainConfig,
)
from memvote.data import Sequence, generate_synthetic
from memvote.model import TrackerNetwork


def tiny_config(**model: object) -> RunConfig:
    """
    Run configuration small enough to train and track in a few seconds.
    """
    config = RunConfig(
        seed=3,
        workers=1,
        model=ModelConfig(
            search_size=64,
            widths=(4, 4, 6, 8),
            key_channels=8,
            value_channels=6,
            value_hidden=6,
            head_width=6,
            attention_width=8,
            heads=2,
            mlp_hidden=8,
            top_k=3,
            dtype='float64',
        ),
        synth=SynthConfig(
            width=96,
            height=80,
            length=10,
            target_size=(16.0, 12.0),
            velocity=(1.0, 0.5),
            distractors=1,
            background_noise=4.0,
            seed=5,
        ),
        data=DataConfig(max_skip=3, synthetic_count=2),
        augment=AugmentConfig(flip=0.0, stretch=0.0, blur=0.0, gray=0.0),
        train=TrainConfig(iterations=2, batch_size=1, lr=1e-3, curriculum_start=2, curriculum_end=3,
                          checkpoint_every=0),
    )

    if model:
        config = replace(config, model=replace(config.model, **model))

    config.validate()
    return config


@pytest.fixture
def config() -> RunConfig:
    return tiny_config()


@pytest.fixture
def network(config: RunConfig) -> TrackerNetwork:
    return TrackerNetwork.from_config(config)


@pytest.fixture
def sequence(config: RunConfig) -> Sequence:
    return generate_synthetic(config.synth, name='tiny', tag='plain')


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def crop_box(network: TrackerNetwork) -> BBox:
    """
    Box centered in the search region, about the size the crop gives to a target.
    """
    size = network.search_size
    return BBox(size / 2, size / 2, size / 3.5, size / 4.5)
