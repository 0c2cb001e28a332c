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

from collections.abc import Callable, Sequence

import numpy as np
from numpy import ndarray

from .tensor import Tape, Tensor

__all__ = [
    'analytic_gradients',
    'numeric_gradient',
    'relative_error',
    'check_gradients',
]


def analytic_gradients(function: Callable[..., Tensor], arrays: Sequence[ndarray]) -> list[ndarray]:
    """
    Function to obtain the gradients of the scalar `function` through the Tape.
    """
    inputs = [Tensor(array, requires_grad=True, dtype=np.float64) for array in arrays]

    with Tape() as tape:
        output = function(*inputs)

    gradients = tape.backward(output, wrt=inputs)
    return [gradients.of(tensor) for tensor in inputs]


def numeric_gradient(
    function: Callable[..., Tensor],
    arrays: Sequence[ndarray],
    index: int,
    step: float = 1e-5
) -> ndarray:
    """
    Function to estimate the gradient of the scalar `function` with respect to `arrays[index]`
    using central differences in float64.
    """
    values = [np.array(array, dtype=np.float64, copy=True) for array in arrays]
    target = values[index]
    result = np.zeros_like(target)

    for position in np.ndindex(target.shape):
        original = target[position]

        target[position] = original + step
        upper = function(*[Tensor(value) for value in values]).item()
        target[position] = original - step
        lower = function(*[Tensor(value) for value in values]).item()
        target[position] = original

        result[position] = (upper - lower) / (2 * step)

    return result


def relative_error(analytic: ndarray, numeric: ndarray, floor: float = 1e-3) -> float:
    """
    Function to compare two gradients. The denominator is floored so that near-zero gradients
    are compared in absolute terms.
    """
    difference = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(difference / scale)


def check_gradients(function: Callable[..., Tensor], *arrays: ndarray, step: float = 1e-5) -> float:
    """
    Function to obtain the largest relative error between the analytic and the numeric gradient
    over every input of `function`.
    """
    analytic = analytic_gradients(function, arrays)
    errors = [
        relative_error(analytic[index], numeric_gradient(function, arrays, index, step))
        for index in range(len(arrays))
    ]
    return max(errors) if errors else 0.0
