from __future__ import annotations

import numpy as np
import pytest

from memvote.backbone import Backbone, Normalizer
from memvote.exception import CheckpointError, ContractViolation
from memvote.head import Prediction, PredictionHead
from memvote.nn import Module, Parameter
from memvote.nn.layers import Conv2d, Linear
from memvote.numerics import Tensor, check_gradients
from memvote.numerics import functional as F


class TestPredictionHead:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(0)
        self.head = PredictionHead(4, 3, anchor_count=2, width=6, rng=np.random.default_rng(1), score_prior=0.01)

    def test_shapes_and_range(self) -> None:
        prediction = self.head(Tensor(self.rng.normal(size=(4, 5, 5))), Tensor(self.rng.normal(size=(3, 5, 5))))

        assert prediction.center.shape == (2, 5, 5)
        assert prediction.regression.shape == (8, 5, 5)
        assert prediction.anchor_count == 2
        assert np.all((prediction.center.data > 0) & (prediction.center.data < 1))
        assert prediction.is_finite()

    def test_scores_start_near_the_prior(self) -> None:
        prediction = self.head(Tensor(self.rng.normal(size=(4, 5, 5))), Tensor(self.rng.normal(size=(3, 5, 5))))
        assert 0.001 < float(np.mean(prediction.center.data)) < 0.1

    def test_mismatched_inputs(self) -> None:
        with pytest.raises(ContractViolation):
            self.head(Tensor(np.zeros((4, 5, 5))), Tensor(np.zeros((3, 4, 4))))

        with pytest.raises(ContractViolation):
            self.head(Tensor(np.zeros((4, 5, 5))), Tensor(np.zeros((2, 5, 5))))

    def test_non_finite_prediction(self) -> None:
        prediction = Prediction(Tensor(np.array([[[np.nan]]])), Tensor(np.zeros((4, 1, 1))))
        assert not prediction.is_finite()

    def test_gradients(self) -> None:
        weights = self.rng.normal(size=(2, 4, 4))
        offsets = self.rng.normal(size=(8, 4, 4))

        def objective(query: Tensor, retrieved: Tensor) -> Tensor:
            prediction = self.head(query, retrieved)
            return F.add(F.sum(F.mul(prediction.center, weights)), F.sum(F.mul(prediction.regression, offsets)))

        error = check_gradients(objective, self.rng.normal(size=(4, 4, 4)), self.rng.normal(size=(3, 4, 4)))
        assert error < 1e-4

    @pytest.mark.parametrize('changed, kept', [('score', 'regression'), ('regression', 'score')])
    def test_branches_are_independent(self, changed: str, kept: str) -> None:
        query, retrieved = Tensor(self.rng.normal(size=(4, 5, 5))), Tensor(self.rng.normal(size=(3, 5, 5)))
        outputs = {'score': 'center', 'regression': 'regression'}
        before = self.head(query, retrieved)

        for name, parameter in self.head.named_parameters():
            if name.startswith(f'{changed}.'):
                parameter.assign(parameter.data + self.rng.normal(size=parameter.data.shape))
        after = self.head(query, retrieved)

        np.testing.assert_array_equal(getattr(after, outputs[kept]).data, getattr(before, outputs[kept]).data)
        assert not np.allclose(getattr(after, outputs[changed]).data, getattr(before, outputs[changed]).data)


class TestBackbone:
    def test_output_stride(self) -> None:
        backbone = Backbone((4, 4, 6, 8), key_channels=6, input_size=64, rng=np.random.default_rng(0))
        features = backbone(Tensor(np.random.default_rng(1).normal(size=(3, 64, 64))))

        assert backbone.output_size == 4
        assert features.shape == (6, 4, 4)

    def test_input_size_is_checked(self) -> None:
        backbone = Backbone((4, 4, 6, 8), key_channels=6, input_size=64, rng=np.random.default_rng(0))

        with pytest.raises(ContractViolation):
            backbone(Tensor(np.zeros((3, 32, 32))))

    def test_shift_by_the_stride_moves_the_response_by_one_cell(self) -> None:
        backbone = Backbone((4, 4, 6, 8), key_channels=6, input_size=256, rng=np.random.default_rng(0))
        patch = np.random.default_rng(2).normal(size=(3, 12, 12))

        image = np.zeros((3, 256, 256))
        image[:, 98:110, 98:110] = patch
        shifted = np.zeros((3, 256, 256))
        shifted[:, 98:110, 114:126] = patch

        original = backbone(Tensor(image)).data
        moved = backbone(Tensor(shifted)).data

        # Zero background and zero biases keep every layer exactly equivariant away from the border.
        np.testing.assert_allclose(moved[:, :, 1:], original[:, :, :-1], atol=1e-12)

        energy = np.sum(original ** 2, axis=0)
        y, x = np.unravel_index(int(np.argmax(energy)), energy.shape)
        assert np.unravel_index(int(np.argmax(np.sum(moved ** 2, axis=0))), energy.shape) == (y, x + 1)

    def test_normalizer(self) -> None:
        frames = [np.full((2, 2, 3), 10.0), np.full((2, 2, 3), 30.0)]
        normalizer = Normalizer.from_frames(frames)

        np.testing.assert_allclose(normalizer.mean, [20.0] * 3)
        np.testing.assert_allclose(normalizer.std, [10.0] * 3)

        tensor = normalizer.apply(np.full((2, 2, 3), 30.0))
        assert tensor.shape == (3, 2, 2)
        np.testing.assert_allclose(tensor.data, np.ones((3, 2, 2)))
        assert Normalizer(**normalizer.to_dict()).mean.tolist() == normalizer.mean.tolist()


class _Pair(Module):
    def __init__(self) -> None:
        self.first = Linear(2, 3, rng=np.random.default_rng(0))
        self.layers = [Conv2d(1, 2, 3, rng=np.random.default_rng(1))]
        self.scale = Parameter(np.ones(1))


class TestModule:
    def test_parameter_names_are_dotted_paths(self) -> None:
        names = [name for name, _ in _Pair().named_parameters()]
        assert names == ['first.weight', 'first.bias', 'layers.0.weight', 'layers.0.bias', 'scale']

    def test_state_dict_round_trip(self) -> None:
        source, target = _Pair(), _Pair()
        source.scale.assign(np.array([4.0]))
        target.load_state_dict(source.state_dict())

        assert target.scale.data[0] == 4.0
        assert target.count_parameters() == 2 * 3 + 3 + 2 * 9 + 2 + 1

    def test_mismatched_state(self) -> None:
        state = _Pair().state_dict()
        state.pop('scale')

        with pytest.raises(CheckpointError):
            _Pair().load_state_dict(state)

        with pytest.raises(CheckpointError):
            _Pair().scale.assign(np.ones(2))
