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

import zlib
from typing import Any

import numpy as np

__all__ = [
    'RandomStreams',
    'generator_state',
    'restore_generator',
]


class RandomStreams:
    """
    Class that derives independent named random generators from one seed.
    A stream depends only on the seed and its name, never on the order streams are requested.
    """

    seed: int = 0
    """
    Attribute with the root seed of all streams.
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = int(seed)

    def sequence(self, name: str, *keys: int) -> np.random.SeedSequence:
        """
        Method to obtain the seed sequence of a stream. Extra integer `keys` derive sub-streams,
        like one per worker or per sequence.
        """
        return np.random.SeedSequence(self.seed, spawn_key=(zlib.crc32(name.encode('utf-8')), *keys))

    def stream(self, name: str, *keys: int) -> np.random.Generator:
        """
        Method to obtain a fresh generator for stream `name`.
        """
        return np.random.default_rng(self.sequence(name, *keys))

    def spawn(self, name: str, count: int) -> list[np.random.Generator]:
        """
        Method to obtain `count` independent generators below stream `name`.
        """
        return [np.random.default_rng(child) for child in self.sequence(name).spawn(count)]


def generator_state(generator: np.random.Generator) -> dict[str, Any]:
    """
    Function to export the state of a generator as plain data for checkpoints.
    """
    return generator.bit_generator.state


def restore_generator(state: dict[str, Any]) -> np.random.Generator:
    """
    Function to rebuild a generator from the output of `generator_state`.
    """
    bit_generator = getattr(np.random, state['bit_generator'])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
