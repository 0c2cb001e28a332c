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

from .anchors import AnchorGrid, BBox, LabelMaps, assign_labels, decode, encode, iou
from .backbone import Backbone, Normalizer
from .config import RunConfig, load_config, save_config
# Module with the sequences, crops and synthetic data used for training and evaluation.
from .data import (
    CropTransform,
    Sequence,
    crop_search_region,
    generate_synthetic,
    load_otb_sequence,
    sample_training_clip,
    synthetic_suite,
)
from .exception import (
    CheckpointError,
    ContractViolation,
    DataError,
    ImproperlyConfigured,
    MemVoteError,
    NumericFault,
    ParseError,
    SerializerError,
)
from .handler import System
from .image.engine import ImageEngine
from .head import Prediction, PredictionHead
from .loss import LossReport, build_sets, center_loss, regression_loss, total_loss
from .memory import Memory, MemorySlot, ValueEncoder, WriteDecision, encode_initial, maybe_write
from .metrics import EvalReport, ao_sr, normalized_precision, precision_curve, success_curve
from .model import TrackerNetwork
# Module with the reverse-mode differentiation used by every trainable component.
from .numerics import Gradients, RandomStreams, Tape, Tensor, check_gradients
# Module with classes that define the pipelines and its processors classes.
# A Pipeline is a sequence that loop processors to be run.
from .pipelines import Pipeline, PipelineRun, Processor
from .pipelines.augmenter import Augmenter, BlurAugmenter, FlipAugmenter, GrayAugmenter, StretchAugmenter
from .retrieval import Retriever, select_candidates, similarity_row
from .serializer import JSONSerializer
from .storage import Storage
from .tracker import Tracker, TrackerState
from .trainer import Trainer

__all__ = [
    'AnchorGrid', 'Augmenter', 'BBox', 'Backbone', 'BlurAugmenter', 'CheckpointError', 'ContractViolation',
    'CropTransform', 'DataError', 'EvalReport', 'FlipAugmenter', 'Gradients', 'GrayAugmenter', 'ImageEngine',
    'ImproperlyConfigured', 'JSONSerializer', 'LabelMaps', 'LossReport', 'MemVoteError', 'Memory', 'MemorySlot',
    'Normalizer', 'NumericFault', 'ParseError', 'Pipeline', 'PipelineRun', 'Prediction', 'PredictionHead', 'Processor',
    'RandomStreams', 'Retriever', 'RunConfig', 'Sequence', 'SerializerError', 'Storage', 'StretchAugmenter',
    'System', 'Tape', 'Tensor', 'Tracker', 'TrackerNetwork', 'TrackerState', 'Trainer', 'ValueEncoder',
    'WriteDecision', 'ao_sr', 'assign_labels', 'build_sets', 'center_loss', 'check_gradients', 'crop_search_region',
    'decode', 'encode', 'encode_initial', 'generate_synthetic', 'iou', 'load_config', 'load_otb_sequence',
    'maybe_write', 'normalized_precision', 'precision_curve', 'regression_loss', 'sample_training_clip',
    'save_config', 'select_candidates', 'similarity_row', 'success_curve', 'synthetic_suite', 'total_loss',
]
