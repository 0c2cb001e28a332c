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

from .crop import CropTransform, crop_search_region, search_side
from .sampler import TrainingClip, TrainingFrame, sample_frame_indices, sample_training_clip
from .sequence import Sequence, load_otb_directory, load_otb_sequence, parse_box_line
from .synthetic import SUITE_TAGS, generate_synthetic, synthetic_suite

__all__ = [
    'CropTransform',
    'SUITE_TAGS',
    'Sequence',
    'TrainingClip',
    'TrainingFrame',
    'crop_search_region',
    'generate_synthetic',
    'load_otb_directory',
    'load_otb_sequence',
    'parse_box_line',
    'sample_frame_indices',
    'sample_training_clip',
    'search_side',
    'synthetic_suite',
]
