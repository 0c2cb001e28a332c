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
import re
from io import BytesIO
from typing import Any, Iterator, Sequence as SequenceType

import numpy as np
from numpy import ndarray

from ..anchors import BBox
from ..exception import ContractViolation, DataError, ParseError
from ..image.engine import ImageEngine
from ..storage import Storage

__all__ = [
    'Sequence',
    'load_otb_sequence',
    'load_otb_directory',
    'parse_box_line',
]

GROUND_TRUTH_FILES: tuple[str, ...] = ('groundtruth_rect.txt', 'groundtruth.txt')
"""
Ground truth file names accepted inside a sequence directory, in order of preference.
"""


class Sequence:
    """
    Class that holds the frames of a video with one annotated box per frame, in center convention and absolute image
    coordinates. Frames are either kept in memory (synthetic) or loaded on demand from image files (disk).
    """

    name: str
    """
    Attribute with the name of the sequence, used for prediction and report files.
    """
    source: str = 'synthetic'
    """
    Attribute with the origin of the frames: `synthetic` or `disk`.
    """
    tag: str | None = None
    """
    Attribute with a free grouping label used by the evaluation report.
    """

    def __init__(
        self,
        name: str,
        boxes: SequenceType[BBox],
        frames: SequenceType[ndarray] | None = None,
        paths: SequenceType[str] | None = None,
        engine: str = 'opencv',
        tag: str | None = None,
        attributes: dict[str, Any] | None = None,
    ) -> None:
        if (frames is None) == (paths is None):
            raise ContractViolation("A sequence requires either in memory frames or frame paths.")

        count = len(frames) if frames is not None else len(paths)

        if count != len(boxes):
            raise DataError(f"Sequence {name} has {count} frames but {len(boxes)} boxes.")
        if count < 2:
            raise DataError(f"Sequence {name} must have at least 2 frames, not {count}.")

        for box in boxes:
            box.validate()

        self.name = name
        self.boxes = list(boxes)
        self.tag = tag
        self.attributes = attributes or {}
        self.engine = engine
        self.source = 'synthetic' if frames is not None else 'disk'

        self._frames = list(frames) if frames is not None else None
        self._paths = list(paths) if paths is not None else None

    def __len__(self) -> int:
        return len(self.boxes)

    def __repr__(self) -> str:
        return f"Sequence({self.name!r}, frames={len(self)}, source={self.source!r}, tag={self.tag!r})"

    def frame(self, index: int) -> ndarray:
        """
        Method to obtain frame `index` as an RGB uint8 array [H, W, 3].
        """
        if self._frames is not None:
            return self._frames[index]

        path = self._paths[index]
        try:
            with Storage.open_file(path, mode='rb') as file_pointer:
                engine = ImageEngine.get_engine(self.engine)(buffer=BytesIO(file_pointer.read()))
        except OSError as error:
            raise DataError(f"Could not read frame {path}: {error}")

        return engine.get_array()

    def frames(self) -> Iterator[ndarray]:
        for index in range(len(self)):
            yield self.frame(index)

    def box(self, index: int) -> BBox:
        return self.boxes[index]

    def frame_size(self) -> tuple[int, int]:
        """
        Method to obtain the width and height of the first frame.
        """
        height, width = self.frame(0).shape[:2]
        return width, height

    def ground_truth(self) -> ndarray:
        """
        Method to obtain the boxes as an array [T, 4] in center convention.
        """
        return np.array([box.as_array() for box in self.boxes])


def parse_box_line(line: str, path: str | None = None, line_number: int | None = None) -> BBox:
    """
    Function to parse a "x,y,w,h" line in top-left convention. Commas, tabs or spaces separate the values.
    """
    parts = [part for part in re.split(r'[,\s]+', line.strip()) if part]

    if len(parts) != 4:
        raise ParseError(f"Expected four values in {line!r}.", path=path, line_number=line_number)

    try:
        values = [float(part) for part in parts]
    except ValueError:
        raise ParseError(f"Could not read numbers from {line!r}.", path=path, line_number=line_number)

    if not np.all(np.isfinite(values)):
        raise ParseError(f"Non finite value in {line!r}.", path=path, line_number=line_number)

    return BBox.from_corner(*values)


def load_otb_sequence(directory: str, engine: str = 'opencv', tag: str | None = None) -> Sequence:
    """
    Function to load a sequence stored in the OTB layout: images under `img/` (or in the directory itself) sorted
    by name, and a ground truth file with one "x,y,w,h" line per frame.
    """
    if not Storage.is_dir(directory):
        raise DataError(f"Sequence directory {directory} does not exist.")

    image_directory = Storage.join(directory, 'img')
    if not Storage.is_dir(image_directory):
        image_directory = directory

    paths = [Storage.join(image_directory, name) for name in Storage.list_images(image_directory)]

    ground_truth = None
    for candidate in GROUND_TRUTH_FILES:
        if Storage.is_file(Storage.join(directory, candidate)):
            ground_truth = Storage.join(directory, candidate)
            break

    if ground_truth is None:
        raise DataError(f"No ground truth file ({', '.join(GROUND_TRUTH_FILES)}) in {directory}.")

    boxes = []
    for number, line in enumerate(Storage.read_lines(ground_truth), start=1):
        if not line.strip():
            continue

        box = parse_box_line(line, path=ground_truth, line_number=number)
        if not box.is_valid():
            raise ParseError(f"Box {line!r} has no area.", path=ground_truth, line_number=number)

        boxes.append(box)

    if len(paths) != len(boxes):
        raise DataError(f"Sequence {directory} has {len(paths)} images but {len(boxes)} ground truth lines.")

    tag_file = Storage.join(directory, 'tag.txt')
    if tag is None and Storage.is_file(tag_file):
        tag = Storage.read_text(tag_file).strip() or None

    name = Storage.get_filename_from_path(directory.rstrip(Storage.sep)) or directory
    logging.debug(f"Loaded sequence {name} with {len(paths)} frames.")

    return Sequence(name, boxes, paths=paths, engine=engine, tag=tag)


def load_otb_directory(directory: str, engine: str = 'opencv') -> list[Sequence]:
    """
    Function to load every sequence directory inside `directory`. A directory that is itself a sequence is
    returned alone.
    """
    if any(Storage.is_file(Storage.join(directory, name)) for name in GROUND_TRUTH_FILES):
        return [load_otb_sequence(directory, engine)]

    sequences = [load_otb_sequence(Storage.join(directory, name), engine) for name in Storage.list_directories(directory)]

    if not sequences:
        raise DataError(f"No sequence found in {directory}.")

    return sequences
