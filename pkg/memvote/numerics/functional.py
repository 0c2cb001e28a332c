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

import builtins
from collections.abc import Sequence
from typing import Any

import numpy as np
from numpy import ndarray

from . import operation as op
from .tensor import Tensor

__all__ = [
    'add',
    'as_tensor',
    'broadcast_to',
    'clip',
    'concat',
    'conv2d',
    'div',
    'dot',
    'exp',
    'linear',
    'log',
    'matmul',
    'max_over_axis',
    'mean',
    'mul',
    'relu',
    'reshape',
    'sigmoid',
    'smooth_l1',
    'softmax_row',
    'stop_gradient',
    'sub',
    'sum',
    'take',
    'transpose',
]


def as_tensor(value: Any, like: Tensor | None = None) -> Tensor:
    """
    Function to convert python numbers and arrays to constant tensors using the dtype of `like`.
    """
    if isinstance(value, Tensor):
        return value

    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)

    b = as_tensor(b)
    return as_tensor(a, like=b), b


def add(a: Any, b: Any) -> Tensor:
    return op.Add.apply(*_pair(a, b))


def sub(a: Any, b: Any) -> Tensor:
    return op.Sub.apply(*_pair(a, b))


def mul(a: Any, b: Any) -> Tensor:
    return op.Mul.apply(*_pair(a, b))


def div(a: Any, b: Any) -> Tensor:
    return op.Div.apply(*_pair(a, b))


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    return op.BroadcastTo.apply(x, shape=tuple(shape))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return op.MatMul.apply(a, b)


def dot(a: Tensor, b: Tensor) -> Tensor:
    return op.Dot.apply(a, b)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return op.Linear.apply(x, weight, bias)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int | None = None) -> Tensor:
    """
    Function to convolve a [C, H, W] tensor. When `padding` is omitted, the kernel half size is used
    so that stride 1 keeps the spatial size.
    """
    if padding is None:
        padding = weight.shape[-1] // 2

    return op.Conv2d.apply(x, weight, bias, stride=stride, padding=padding)


def relu(x: Tensor) -> Tensor:
    return op.ReLU.apply(x)


def exp(x: Tensor) -> Tensor:
    return op.Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return op.Log.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return op.Sigmoid.apply(x)


def clip(x: Tensor, low: float, high: float) -> Tensor:
    return op.Clip.apply(x, low=low, high=high)


def smooth_l1(x: Tensor) -> Tensor:
    return op.SmoothL1.apply(x)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return op.Concat.apply(*tensors, axis=axis)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return op.Reshape.apply(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    return op.Transpose.apply(x, axes=tuple(axes) if axes is not None else None)


def sum(x: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return op.Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    return div(sum(x, axis=axis), builtins.max(count, 1))


def max_over_axis(x: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    return op.MaxOverAxis.apply(x, axis=axis, keepdims=keepdims)


def softmax_row(x: Tensor, mask: ndarray | None = None) -> Tensor:
    return op.SoftmaxRow.apply(x, mask=mask)


def take(x: Tensor, indexes: Sequence[int] | ndarray, axis: int = 0) -> Tensor:
    return op.Take.apply(x, indexes=np.asarray(indexes, dtype=np.int64), axis=axis)


def stop_gradient(x: Tensor) -> Tensor:
    """
    Function to obtain a constant copy of `x` that is never differentiated.
    """
    return x.detach()
