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

from typing import Any

import numpy as np
from numpy import ndarray

from ..exception import ContractViolation, NumericFault
from .tensor import OpRecord, Tape, Tensor

__all__ = [
    'Add',
    'BroadcastTo',
    'Clip',
    'Concat',
    'Conv2d',
    'Div',
    'Dot',
    'Exp',
    'Linear',
    'Log',
    'MatMul',
    'MaxOverAxis',
    'Mul',
    'Operation',
    'ReLU',
    'Reshape',
    'Sigmoid',
    'SmoothL1',
    'SoftmaxRow',
    'Sub',
    'Sum',
    'Take',
    'Transpose',
    'unbroadcast',
]


def unbroadcast(gradient: ndarray, shape: tuple[int, ...]) -> ndarray:
    """
    Function to reduce a gradient computed for a broadcast result back to the shape of the operand.
    """
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)

    for axis, size in enumerate(shape):
        if size == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)

    return gradient


class Operation:
    """
    Base class for the closed set of differentiable operations.
    Subclasses implement `forward` and `backward` as classmethods over plain arrays and
    are registered by `name` in `registry`.
    """

    name: str | None = None
    """
    Attribute used as key in the registry.
    """
    registry: dict[str, type[Operation]] = {}
    """
    Attribute that stores all operations available.
    """

    def __init_subclass__(cls, **kwargs: Any) -> None:
        super().__init_subclass__(**kwargs)
        if cls.name:
            Operation.registry[cls.name] = cls

    @classmethod
    def validate(cls, *arrays: ndarray, **attributes: Any) -> None:
        """
        Method to check the preconditions of the operation, raising `ContractViolation` when broken.
        """

    @classmethod
    def forward(cls, *arrays: ndarray, **attributes: Any) -> tuple[ndarray, Any]:
        """
        Method to compute the output and whatever must be saved for the backward pass.
        """
        raise NotImplementedError("Method forward must be overwritten on child class.")

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, *arrays: ndarray, **attributes: Any) -> tuple[ndarray | None, ...]:
        """
        Method to compute the gradient of each input given the gradient of the output.
        """
        raise NotImplementedError("Method backward must be overwritten on child class.")

    @classmethod
    def apply(cls, *inputs: Tensor, **attributes: Any) -> Tensor:
        """
        Method to run the operation over tensors, checking the output for non-finite values and
        recording the call on the active Tape when any input requires gradient.
        """
        arrays = tuple(tensor.data for tensor in inputs)
        cls.validate(*arrays, **attributes)

        with np.errstate(all='ignore'):
            output, saved = cls.forward(*arrays, **attributes)

        output = np.asarray(output)
        if not np.all(np.isfinite(output)):
            raise NumericFault(f"Operation {cls.name} produced a non-finite value for inputs of shape "
                               f"{[array.shape for array in arrays]}.")

        requires_grad = any(tensor.requires_grad for tensor in inputs)
        result = Tensor.wrap(np.array(output, copy=True), requires_grad=requires_grad)

        tape = Tape.current()
        if requires_grad and tape is not None:
            tape.record(OpRecord(cls, tuple(inputs), result, saved, dict(attributes)))

        return result


class Add(Operation):
    name = 'add'

    @classmethod
    def validate(cls, *arrays: ndarray, **attributes: Any) -> None:
        try:
            np.broadcast_shapes(arrays[0].shape, arrays[1].shape)
        except ValueError as e:
            raise ContractViolation(f"Shapes {arrays[0].shape} and {arrays[1].shape} can't be broadcast.") from e

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return a + b, None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        return unbroadcast(gradient, a.shape), unbroadcast(gradient, b.shape)


class Sub(Add):
    name = 'sub'

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return a - b, None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        return unbroadcast(gradient, a.shape), unbroadcast(-gradient, b.shape)


class Mul(Add):
    name = 'mul'

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return a * b, None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        return unbroadcast(gradient * b, a.shape), unbroadcast(gradient * a, b.shape)


class Div(Add):
    name = 'div'

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return a / b, None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        return unbroadcast(gradient / b, a.shape), unbroadcast(-gradient * a / (b * b), b.shape)


class BroadcastTo(Operation):
    name = 'broadcast_to'

    @classmethod
    def validate(cls, a: ndarray, shape: tuple[int, ...]) -> None:
        try:
            np.broadcast_shapes(a.shape, tuple(shape))
        except ValueError as e:
            raise ContractViolation(f"Shape {a.shape} can't be broadcast to {shape}.") from e

    @classmethod
    def forward(cls, a: ndarray, shape: tuple[int, ...]) -> tuple[ndarray, Any]:
        return np.broadcast_to(a, tuple(shape)), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, shape: tuple[int, ...]) -> tuple[ndarray]:
        return unbroadcast(gradient, a.shape),


class MatMul(Operation):
    """
    Batched matrix product. Batch dimensions must be equal, or `b` must be a plain matrix shared by the batch.
    """

    name = 'matmul'

    @classmethod
    def validate(cls, a: ndarray, b: ndarray) -> None:
        if a.ndim < 2 or b.ndim < 2:
            raise ContractViolation(f"Matmul requires operands with at least two dimensions, not {a.shape} and {b.shape}.")
        if a.shape[-1] != b.shape[-2]:
            raise ContractViolation(f"Matmul inner dimensions differ for {a.shape} and {b.shape}.")
        if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
            raise ContractViolation(f"Matmul batch dimensions differ for {a.shape} and {b.shape}.")

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return np.matmul(a, b), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        gradient_a = np.matmul(gradient, np.swapaxes(b, -1, -2))
        gradient_b = np.matmul(np.swapaxes(a, -1, -2), gradient)

        if b.ndim == 2 and gradient_b.ndim > 2:
            gradient_b = gradient_b.reshape(-1, *b.shape).sum(axis=0)

        return gradient_a, gradient_b


class Dot(Operation):
    name = 'dot'

    @classmethod
    def validate(cls, a: ndarray, b: ndarray) -> None:
        if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
            raise ContractViolation(f"Dot requires two vectors of the same length, not {a.shape} and {b.shape}.")

    @classmethod
    def forward(cls, a: ndarray, b: ndarray) -> tuple[ndarray, Any]:
        return np.asarray(np.dot(a, b)), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, a: ndarray, b: ndarray) -> tuple[ndarray, ndarray]:
        return gradient * b, gradient * a


class Linear(Operation):
    """
    Affine map over the last axis: `x @ weight + bias` with weight of shape [in, out].
    """

    name = 'linear'

    @classmethod
    def validate(cls, x: ndarray, weight: ndarray, bias: ndarray) -> None:
        if weight.ndim != 2 or bias.shape != (weight.shape[1],):
            raise ContractViolation(f"Linear requires weight [in, out] and bias [out], not {weight.shape} and {bias.shape}.")
        if x.shape[-1] != weight.shape[0]:
            raise ContractViolation(f"Linear input width {x.shape[-1]} differs from weight input {weight.shape[0]}.")

    @classmethod
    def forward(cls, x: ndarray, weight: ndarray, bias: ndarray) -> tuple[ndarray, Any]:
        return x @ weight + bias, None

    @classmethod
    def backward(
        cls,
        gradient: ndarray,
        saved: Any,
        x: ndarray,
        weight: ndarray,
        bias: ndarray
    ) -> tuple[ndarray, ndarray, ndarray]:
        flat_gradient = gradient.reshape(-1, weight.shape[1])
        flat_x = x.reshape(-1, weight.shape[0])

        return gradient @ weight.T, flat_x.T @ flat_gradient, flat_gradient.sum(axis=0)


class Conv2d(Operation):
    """
    Two-dimensional convolution of a [C, H, W] map with weight [O, C, k, k] and bias [O].
    Kernels must be square and of odd size, stride is 1 or 2 and padding is zero padding.
    """

    name = 'conv2d'

    @classmethod
    def output_size(cls, size: int, kernel: int, stride: int, padding: int) -> int:
        return (size + 2 * padding - kernel) // stride + 1

    @classmethod
    def validate(cls, x: ndarray, weight: ndarray, bias: ndarray, stride: int = 1, padding: int = 0) -> None:
        if x.ndim != 3 or weight.ndim != 4:
            raise ContractViolation(f"Conv2d requires input [C, H, W] and weight [O, C, k, k], not {x.shape} and {weight.shape}.")
        if weight.shape[1] != x.shape[0]:
            raise ContractViolation(f"Conv2d weight expects {weight.shape[1]} channels but input has {x.shape[0]}.")
        if weight.shape[2] != weight.shape[3] or weight.shape[2] % 2 == 0:
            raise ContractViolation(f"Conv2d kernel must be square and odd, not {weight.shape[2:]}.")
        if bias.shape != (weight.shape[0],):
            raise ContractViolation(f"Conv2d bias must have shape ({weight.shape[0]},), not {bias.shape}.")
        if stride not in (1, 2):
            raise ContractViolation(f"Conv2d stride must be 1 or 2, not {stride}.")

        kernel = weight.shape[2]
        if cls.output_size(x.shape[1], kernel, stride, padding) < 1 or cls.output_size(x.shape[2], kernel, stride, padding) < 1:
            raise ContractViolation(f"Conv2d input {x.shape} is too small for kernel {kernel}.")

    @classmethod
    def _columns(cls, x: ndarray, kernel: int, stride: int, padding: int) -> ndarray:
        channels, height, width = x.shape
        padded = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
        out_height = cls.output_size(height, kernel, stride, padding)
        out_width = cls.output_size(width, kernel, stride, padding)

        columns = np.empty((channels, kernel, kernel, out_height, out_width), dtype=x.dtype)
        for ki in range(kernel):
            for kj in range(kernel):
                columns[:, ki, kj] = padded[
                    :,
                    ki:ki + stride * (out_height - 1) + 1:stride,
                    kj:kj + stride * (out_width - 1) + 1:stride
                ]

        return columns

    @classmethod
    def forward(
        cls,
        x: ndarray,
        weight: ndarray,
        bias: ndarray,
        stride: int = 1,
        padding: int = 0
    ) -> tuple[ndarray, Any]:
        kernel = weight.shape[2]
        columns = cls._columns(x, kernel, stride, padding)
        out_height, out_width = columns.shape[-2:]

        flat_columns = columns.reshape(-1, out_height * out_width)
        output = weight.reshape(weight.shape[0], -1) @ flat_columns + bias[:, None]

        return output.reshape(weight.shape[0], out_height, out_width), flat_columns

    @classmethod
    def backward(
        cls,
        gradient: ndarray,
        saved: ndarray,
        x: ndarray,
        weight: ndarray,
        bias: ndarray,
        stride: int = 1,
        padding: int = 0
    ) -> tuple[ndarray, ndarray, ndarray]:
        channels, height, width = x.shape
        kernel = weight.shape[2]
        out_height, out_width = gradient.shape[-2:]
        flat_gradient = gradient.reshape(weight.shape[0], -1)

        gradient_weight = (flat_gradient @ saved.T).reshape(weight.shape)
        gradient_bias = flat_gradient.sum(axis=1)

        gradient_columns = (weight.reshape(weight.shape[0], -1).T @ flat_gradient).reshape(
            channels, kernel, kernel, out_height, out_width
        )
        gradient_padded = np.zeros((channels, height + 2 * padding, width + 2 * padding), dtype=x.dtype)
        for ki in range(kernel):
            for kj in range(kernel):
                gradient_padded[
                    :,
                    ki:ki + stride * (out_height - 1) + 1:stride,
                    kj:kj + stride * (out_width - 1) + 1:stride
                ] += gradient_columns[:, ki, kj]

        gradient_x = gradient_padded[:, padding:padding + height, padding:padding + width]

        return gradient_x, gradient_weight, gradient_bias


class ReLU(Operation):
    name = 'relu'

    @classmethod
    def forward(cls, x: ndarray) -> tuple[ndarray, Any]:
        mask = x > 0
        return np.where(mask, x, 0), mask

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray) -> tuple[ndarray]:
        return gradient * saved,


class Exp(Operation):
    name = 'exp'

    @classmethod
    def forward(cls, x: ndarray) -> tuple[ndarray, Any]:
        output = np.exp(x)
        return output, output

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray) -> tuple[ndarray]:
        return gradient * saved,


class Log(Operation):
    name = 'log'

    @classmethod
    def forward(cls, x: ndarray) -> tuple[ndarray, Any]:
        return np.log(x), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, x: ndarray) -> tuple[ndarray]:
        return gradient / x,


class Sigmoid(Operation):
    name = 'sigmoid'

    @classmethod
    def forward(cls, x: ndarray) -> tuple[ndarray, Any]:
        exponential = np.exp(-np.abs(x))
        output = np.where(x >= 0, 1.0 / (1.0 + exponential), exponential / (1.0 + exponential)).astype(x.dtype)
        return output, output

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray) -> tuple[ndarray]:
        return gradient * saved * (1.0 - saved),


class Clip(Operation):
    name = 'clip'

    @classmethod
    def forward(cls, x: ndarray, low: float, high: float) -> tuple[ndarray, Any]:
        return np.clip(x, low, high), (x >= low) & (x <= high)

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray, low: float, high: float) -> tuple[ndarray]:
        return gradient * saved,


class SmoothL1(Operation):
    """
    Elementwise smooth L1 penalty of a difference: 0.5 d² when |d| < 1 and |d| - 0.5 otherwise.
    """

    name = 'smooth_l1'

    @classmethod
    def forward(cls, x: ndarray) -> tuple[ndarray, Any]:
        magnitude = np.abs(x)
        return np.where(magnitude < 1.0, 0.5 * x * x, magnitude - 0.5), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, x: ndarray) -> tuple[ndarray]:
        return gradient * np.where(np.abs(x) < 1.0, x, np.sign(x)),


class Concat(Operation):
    name = 'concat'

    @classmethod
    def validate(cls, *arrays: ndarray, axis: int = 0) -> None:
        if not arrays:
            raise ContractViolation("Concat requires at least one tensor.")

        reference = list(arrays[0].shape)
        for array in arrays[1:]:
            shape = list(array.shape)
            if len(shape) != len(reference):
                raise ContractViolation(f"Concat requires tensors of same rank, not {arrays[0].shape} and {array.shape}.")
            shape[axis] = reference[axis]
            if shape != reference:
                raise ContractViolation(f"Concat shapes {arrays[0].shape} and {array.shape} differ outside axis {axis}.")

    @classmethod
    def forward(cls, *arrays: ndarray, axis: int = 0) -> tuple[ndarray, Any]:
        return np.concatenate(arrays, axis=axis), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, *arrays: ndarray, axis: int = 0) -> tuple[ndarray, ...]:
        boundaries = np.cumsum([array.shape[axis] for array in arrays])[:-1]
        return tuple(np.split(gradient, boundaries, axis=axis))


class Reshape(Operation):
    name = 'reshape'

    @classmethod
    def validate(cls, x: ndarray, shape: tuple[int, ...]) -> None:
        known = [size for size in shape if size != -1]
        total = int(np.prod(known)) if known else 1
        if (-1 not in shape and total != x.size) or (-1 in shape and (total == 0 or x.size % total)):
            raise ContractViolation(f"Can't reshape tensor of shape {x.shape} to {shape}.")

    @classmethod
    def forward(cls, x: ndarray, shape: tuple[int, ...]) -> tuple[ndarray, Any]:
        return x.reshape(shape), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, x: ndarray, shape: tuple[int, ...]) -> tuple[ndarray]:
        return gradient.reshape(x.shape),


class Transpose(Operation):
    name = 'transpose'

    @classmethod
    def forward(cls, x: ndarray, axes: tuple[int, ...] | None = None) -> tuple[ndarray, Any]:
        return np.transpose(x, axes), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, x: ndarray, axes: tuple[int, ...] | None = None) -> tuple[ndarray]:
        if axes is None:
            return np.transpose(gradient),

        return np.transpose(gradient, np.argsort(axes)),


class Sum(Operation):
    name = 'sum'

    @classmethod
    def forward(cls, x: ndarray, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> tuple[ndarray, Any]:
        return np.asarray(np.sum(x, axis=axis, keepdims=keepdims)), None

    @classmethod
    def backward(
        cls,
        gradient: ndarray,
        saved: Any,
        x: ndarray,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False
    ) -> tuple[ndarray]:
        if axis is not None and not keepdims:
            axes = (axis,) if isinstance(axis, int) else axis
            gradient = np.expand_dims(gradient, tuple(a % x.ndim for a in axes))

        return np.broadcast_to(gradient, x.shape).copy(),


class MaxOverAxis(Operation):
    """
    Maximum over one axis. The gradient flows only to the first maximal element.
    """

    name = 'max_over_axis'

    @classmethod
    def validate(cls, x: ndarray, axis: int, keepdims: bool = False) -> None:
        if x.ndim == 0 or x.shape[axis] == 0:
            raise ContractViolation(f"Max over axis {axis} requires a non empty axis, not shape {x.shape}.")

    @classmethod
    def forward(cls, x: ndarray, axis: int, keepdims: bool = False) -> tuple[ndarray, Any]:
        indexes = np.expand_dims(np.argmax(x, axis=axis), axis)
        output = np.take_along_axis(x, indexes, axis=axis)

        if not keepdims:
            output = np.squeeze(output, axis=axis)

        return output, indexes

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray, axis: int, keepdims: bool = False) -> tuple[ndarray]:
        if not keepdims:
            gradient = np.expand_dims(gradient, axis)

        result = np.zeros_like(x)
        np.put_along_axis(result, saved, gradient, axis=axis)

        return result,


class SoftmaxRow(Operation):
    """
    Numerically stable softmax over the last axis. Entries where `mask` is true are excluded and receive 0.
    """

    name = 'softmax_row'

    @classmethod
    def validate(cls, x: ndarray, mask: ndarray | None = None) -> None:
        if x.ndim == 0 or x.shape[-1] == 0:
            raise ContractViolation(f"Softmax requires a non empty last axis, not shape {x.shape}.")
        if mask is not None and np.any(np.all(np.broadcast_to(mask, x.shape), axis=-1)):
            raise ContractViolation("Softmax mask excludes every entry of a row.")

    @classmethod
    def forward(cls, x: ndarray, mask: ndarray | None = None) -> tuple[ndarray, Any]:
        if mask is not None:
            x = np.where(mask, -np.inf, x)

        shifted = x - np.max(x, axis=-1, keepdims=True)
        exponential = np.exp(shifted)
        output = exponential / np.sum(exponential, axis=-1, keepdims=True)

        return output, output

    @classmethod
    def backward(cls, gradient: ndarray, saved: ndarray, x: ndarray, mask: ndarray | None = None) -> tuple[ndarray]:
        return saved * (gradient - np.sum(gradient * saved, axis=-1, keepdims=True)),


class Take(Operation):
    """
    Gather of entries along an axis by a vector of indexes. Repeated indexes accumulate gradient.
    """

    name = 'take'

    @classmethod
    def validate(cls, x: ndarray, indexes: ndarray, axis: int = 0) -> None:
        indexes = np.asarray(indexes)
        if indexes.ndim != 1:
            raise ContractViolation(f"Take requires a vector of indexes, not shape {indexes.shape}.")
        if indexes.size and (indexes.min() < 0 or indexes.max() >= x.shape[axis]):
            raise ContractViolation(f"Take indexes out of range for axis {axis} of shape {x.shape}.")

    @classmethod
    def forward(cls, x: ndarray, indexes: ndarray, axis: int = 0) -> tuple[ndarray, Any]:
        return np.take(x, np.asarray(indexes), axis=axis), None

    @classmethod
    def backward(cls, gradient: ndarray, saved: Any, x: ndarray, indexes: ndarray, axis: int = 0) -> tuple[ndarray]:
        result = np.zeros_like(x)
        np.add.at(np.moveaxis(result, axis, 0), np.asarray(indexes), np.moveaxis(gradient, axis, 0))
        return result,
