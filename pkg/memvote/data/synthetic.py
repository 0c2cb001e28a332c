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
from dataclasses import dataclass, replace

import cv2
import numpy as np
from numpy import ndarray

from ..anchors import BBox
from ..config import SynthConfig
from ..numerics import RandomStreams
from .sequence import Sequence

__all__ = [
    'SUITE_TAGS',
    'generate_synthetic',
    'synthetic_suite',
]

SUITE_TAGS: tuple[str, ...] = ('plain', 'drift', 'occlusion', 'distractor')
"""
Variants cycled by `synthetic_suite`, each stressing one failure mode of a template-only tracker.
"""

SCALE_LIMITS: tuple[float, float] = (0.5, 2.0)
"""
Bounds of the target size relative to its initial size; scale drift reverses at the bounds.
"""


@dataclass
class _Mover:
    cx: float
    cy: float
    w: float
    h: float
    vx: float
    vy: float
    color: ndarray
    stripe_color: ndarray

    def advance(self, noise: ndarray, width: int, height: int) -> None:
        self.cx += self.vx + noise[0]
        self.cy += self.vy + noise[1]

        # Bounce on the canvas border keeping the whole object inside.
        if self.cx - self.w / 2 < 0:
            self.cx, self.vx = self.w / 2, abs(self.vx)
        elif self.cx + self.w / 2 > width:
            self.cx, self.vx = width - self.w / 2, -abs(self.vx)

        if self.cy - self.h / 2 < 0:
            self.cy, self.vy = self.h / 2, abs(self.vy)
        elif self.cy + self.h / 2 > height:
            self.cy, self.vy = height - self.h / 2, -abs(self.vy)

    @property
    def box(self) -> BBox:
        return BBox(self.cx, self.cy, self.w, self.h)


def _shape_mask(mover: _Mover, shape: str, width: int, height: int) -> ndarray:
    mask = np.zeros((height, width), dtype=np.uint8)
    left, top = int(round(mover.cx - mover.w / 2)), int(round(mover.cy - mover.h / 2))
    right, bottom = int(round(mover.cx + mover.w / 2)) - 1, int(round(mover.cy + mover.h / 2)) - 1

    if shape == 'ellipse':
        center = (int(round(mover.cx)), int(round(mover.cy)))
        axes = (max(1, int(round(mover.w / 2))), max(1, int(round(mover.h / 2))))
        cv2.ellipse(mask, center, axes, 0, 0, 360, 255, thickness=-1)
    else:
        cv2.rectangle(mask, (left, top), (right, bottom), 255, thickness=-1)

    return mask > 0


def _paint(canvas: ndarray, mover: _Mover, mask: ndarray, stripes: int) -> None:
    """
    Function to paint `mover` over `mask` with `stripes` vertical stripes of its second color.
    """
    canvas[mask] = mover.color

    if stripes > 0:
        columns = np.arange(canvas.shape[1], dtype=np.float64)
        stripe_width = mover.w / (2 * stripes)
        band = np.floor((columns - (mover.cx - mover.w / 2)) / stripe_width).astype(int) % 2 == 1
        striped = mask & band[None, :]
        canvas[striped] = mover.stripe_color


def _background(rng: np.random.Generator, width: int, height: int) -> ndarray:
    base = rng.uniform(40, 200, 3)
    ys, xs = np.mgrid[0:height, 0:width]
    gradient = (xs / width - 0.5)[..., None] * rng.uniform(-60, 60, 3) + (ys / height - 0.5)[..., None] * rng.uniform(-60, 60, 3)
    canvas = base + gradient

    for _ in range(6):
        center = (int(rng.integers(0, width)), int(rng.integers(0, height)))
        radius = int(rng.integers(8, max(9, min(width, height) // 4)))
        cv2.circle(canvas, center, radius, tuple(float(value) for value in rng.uniform(30, 220, 3)), thickness=-1)

    return canvas


def generate_synthetic(config: SynthConfig, name: str | None = None, tag: str | None = None) -> Sequence:
    """
    Function to render a sequence of a striped target moving over a textured background. Look-alike distractors
    are drawn under the target and occluders over it during the occlusion ranges. The per frame fraction of visible
    target pixels is kept in the sequence attribute `visibility`.
    The seed fully determines the frames.
    """
    config.validate()

    streams = RandomStreams(config.seed)
    layout = streams.stream('synth.layout')
    motion = streams.stream('synth.motion')
    noise = streams.stream('synth.noise')

    width, height = config.width, config.height
    target_width, target_height = config.target_size

    color = layout.uniform(0, 255, 3)
    stripe_color = 255.0 - color
    goal_color = layout.uniform(0, 255, 3)

    target = _Mover(
        cx=float(layout.uniform(target_width / 2, width - target_width / 2)),
        cy=float(layout.uniform(target_height / 2, height - target_height / 2)),
        w=float(target_width),
        h=float(target_height),
        vx=float(config.velocity[0]),
        vy=float(config.velocity[1]),
        color=color,
        stripe_color=stripe_color,
    )

    distractors = []
    for _ in range(config.distractors):
        own = layout.uniform(0, 255, 3)
        similar = config.distractor_similarity * color + (1 - config.distractor_similarity) * own
        speed = layout.uniform(-2.0, 2.0, 2)
        distractors.append(_Mover(
            cx=float(layout.uniform(target_width / 2, width - target_width / 2)),
            cy=float(layout.uniform(target_height / 2, height - target_height / 2)),
            w=float(target_width * layout.uniform(0.8, 1.2)),
            h=float(target_height * layout.uniform(0.8, 1.2)),
            vx=float(speed[0]),
            vy=float(speed[1]),
            color=similar,
            stripe_color=255.0 - similar,
        ))

    background = _background(layout, width, height)
    occluder_color = layout.uniform(0, 255, 3)

    frames = []
    boxes = []
    visibility = []
    growth = 1.0 + config.scale_drift

    for index in range(config.length):
        if index > 0:
            target.advance(motion.normal(0.0, config.motion_noise, 2) if config.motion_noise else np.zeros(2),
                           width, height)
            for distractor in distractors:
                distractor.advance(motion.normal(0.0, 1.0, 2), width, height)

            if config.scale_drift:
                relative = target.w * growth / target_width
                if not SCALE_LIMITS[0] <= relative <= SCALE_LIMITS[1]:
                    growth = 1.0 / growth
                target.w *= growth
                target.h *= growth
                target.advance(np.zeros(2), width, height)

            if config.appearance_drift:
                target.color = target.color + config.appearance_drift * (goal_color - target.color)
                target.stripe_color = 255.0 - target.color

        canvas = background.copy()
        if config.background_noise:
            canvas += noise.normal(0.0, config.background_noise, canvas.shape)

        for distractor in distractors:
            _paint(canvas, distractor, _shape_mask(distractor, config.shape, width, height), config.stripes)

        target_mask = _shape_mask(target, config.shape, width, height)
        _paint(canvas, target, target_mask, config.stripes)

        visible = target_mask
        if any(start <= index <= end for start, end in config.occlusions):
            left = int(round(target.cx - target.w * 0.6))
            top = int(round(target.cy - target.h * 0.6))
            right = int(round(target.cx + target.w * 0.6))
            bottom = int(round(target.cy + target.h * 0.6))
            occluder = np.zeros((height, width), dtype=np.uint8)
            cv2.rectangle(occluder, (left, top), (right, bottom), 255, thickness=-1)
            canvas[occluder > 0] = occluder_color
            visible = target_mask & (occluder == 0)

        total = int(target_mask.sum())
        visibility.append(float(visible.sum()) / total if total else 0.0)

        frames.append(np.clip(np.rint(canvas), 0, 255).astype(np.uint8))
        boxes.append(target.box)

    name = name or f"synthetic_{config.seed}"
    logging.debug(f"Generated synthetic sequence {name} with {config.length} frames.")

    return Sequence(name, boxes, frames=frames, tag=tag, attributes={'visibility': visibility, 'seed': config.seed})


def synthetic_suite(base: SynthConfig, count: int, seed: int = 0, split: str = 'train') -> list[Sequence]:
    """
    Function to generate `count` sequences cycling through `SUITE_TAGS`. Each sequence draws its own seed, target
    size and velocity from the suite seed; distinct `split` names never share sequences.
    """
    rng = RandomStreams(seed).stream(f"synth.suite.{split}")
    sequences = []

    for index in range(count):
        tag = SUITE_TAGS[index % len(SUITE_TAGS)]
        size = base.target_size[0] * rng.uniform(0.8, 1.25), base.target_size[1] * rng.uniform(0.8, 1.25)
        velocity = tuple(float(value) for value in rng.uniform(-2.0, 2.0, 2))
        config = replace(base, seed=int(rng.integers(0, 2 ** 31 - 1)), target_size=size, velocity=velocity)

        if tag == 'drift':
            config = replace(config, appearance_drift=0.03, scale_drift=0.004)
        elif tag == 'occlusion':
            start = config.length // 3
            config = replace(config, occlusions=[(start, start + max(1, config.length // 10))])
        elif tag == 'distractor':
            config = replace(config, distractors=max(4, config.distractors), distractor_similarity=0.85)

        sequences.append(generate_synthetic(config, name=f"{tag}_{index:03d}", tag=tag))

    return sequences
