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

import itertools
from collections.abc import Iterable, Iterator, Mapping
from contextvars import ContextVar, Token
from dataclasses import dataclass, field
from typing import Any, TYPE_CHECKING

import numpy as np
from numpy import ndarray

from ..exception import ContractViolation

if TYPE_CHECKING:
    from .operation import Operation

__all__ = [
    "Gradients",
    "OpRecord",
    "Tape",
    "Tensor",
]

_identifiers: Iterator[int] = itertools.count()
_current_tape: ContextVar[Tape | None] = ContextVar("memvote_current_tape", default=None)


class Tensor:
    """
    Class that holds an immutable dense array of real values in row-major order.
    Every quantity handled by the model (features, similarity rows, score maps, losses) is a Tensor.
    """

    data: ndarray
    """
    Attribute where the array is stored. The array is flagged as read-only.
    """
    requires_grad: bool = False
    """
    Attribute that indicates whether operations over this tensor should be recorded on the active Tape.
    """
    name: str | None = None
    """
    Attribute used to identify parameters in checkpoints and gradient maps.
    """

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: Any = None
    ) -> None:
        """
        Method to instantiate a tensor copying `data` to a new array.
        Integer and boolean data are promoted to float64 unless `dtype` is informed.
        """
        array: ndarray = np.array(data, dtype=dtype, copy=True)

        if dtype is None and not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)

        array.flags.writeable = False

        self.data = array
        self.requires_grad = requires_grad
        self.name = name
        self.uid: int = next(_identifiers)

    @classmethod
    def wrap(cls, array: ndarray, requires_grad: bool = False) -> Tensor:
        """
        Method to create a tensor that takes ownership of `array` without copying it.
        The caller must not keep a writable reference to the array.
        """
        self = cls.__new__(cls)
        array.flags.writeable = False
        self.data = array
        self.requires_grad = requires_grad
        self.name = None
        self.uid = next(_identifiers)

        return self

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return len(self.data)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def detach(self) -> Tensor:
        """
        Method to obtain a tensor sharing the same values that will never be recorded on a Tape.
        """
        return Tensor.wrap(self.data, requires_grad=False)

    def item(self) -> float:
        """
        Method to obtain the python float of a tensor with a single value.
        """
        if self.data.size != 1:
            raise ContractViolation(f"Only tensors with one element can be converted to float, not shape {self.shape}.")

        return float(self.data.reshape(-1)[0])

    def numpy(self) -> ndarray:
        """
        Method to obtain a writable copy of the values.
        """
        return np.array(self.data, copy=True)

    # Operators are shortcuts to `memvote.numerics.functional`.
    def __add__(self, other: Any) -> Tensor:
        from . import functional
        return functional.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from . import functional
        return functional.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from . import functional
        return functional.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from . import functional
        return functional.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from . import functional
        return functional.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from . import functional
        return functional.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        from . import functional
        return functional.div(self, other)

    def __neg__(self) -> Tensor:
        from . import functional
        return functional.mul(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        from . import functional
        return functional.matmul(self, other)

    def reshape(self, *shape: int) -> Tensor:
        from . import functional
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return functional.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        from . import functional
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return functional.transpose(self, axes or None)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        from . import functional
        return functional.sum(self, axis=axis, keepdims=keepdims)


@dataclass
class OpRecord:
    """
    Class that registers one operation executed while a Tape was active.
    """

    operation: type[Operation]
    inputs: tuple[Tensor, ...]
    output: Tensor
    saved: Any
    attributes: dict[str, Any] = field(default_factory=dict)


class Gradients(Mapping[int, Tensor]):
    """
    Class that maps tensor identifiers to the gradient of a loss with respect to them.
    Tensors can be used directly as keys. Tensors that were not reached by the backward pass
    resolve to a zero gradient through `of`.
    """

    def __init__(self, values: dict[int, ndarray], shapes: dict[int, Tensor]) -> None:
        self._values = values
        self._tensors = shapes

    def __getitem__(self, key: int | Tensor) -> Tensor:
        uid = key.uid if isinstance(key, Tensor) else key
        return Tensor.wrap(self._values[uid])

    def __iter__(self) -> Iterator[int]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, key: object) -> bool:
        uid = key.uid if isinstance(key, Tensor) else key
        return uid in self._values

    def of(self, tensor: Tensor) -> ndarray:
        """
        Method to obtain the gradient array for `tensor`, or zeros when the loss does not depend on it.
        """
        value = self._values.get(tensor.uid)

        if value is None:
            return np.zeros_like(tensor.data)

        return value


class Tape:
    """
    Class that records operations in topological order to allow the reverse-mode differentiation of a scalar.
    A Tape is active inside its `with` block. Activation is scoped by a context variable, so tapes used by
    distinct threads never see each other's records.
    """

    def __init__(self) -> None:
        self.records: list[OpRecord] = []
        self._token: Token | None = None

    def __enter__(self) -> Tape:
        self._token = _current_tape.set(self)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        if self._token is not None:
            _current_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.records)

    @staticmethod
    def current() -> Tape | None:
        """
        Method to obtain the Tape active in the current context, if any.
        """
        return _current_tape.get()

    def record(self, record: OpRecord) -> None:
        """
        Method to append a record. Records are appended after their inputs were produced, which
        keeps the list in topological order.
        """
        self.records.append(record)

    def backward(self, loss: Tensor, wrt: Iterable[Tensor] | None = None) -> Gradients:
        """
        Method to compute the gradient of the scalar `loss` with respect to every tensor that requires gradient.
        Each record is visited exactly once, in reverse order. Tensors in `wrt` that were not reached receive a
        zero gradient.
        """
        if loss.ndim != 0:
            raise ContractViolation(f"The loss for backward must be a scalar, not a tensor of shape {loss.shape}.")

        values: dict[int, ndarray] = {loss.uid: np.ones_like(loss.data)}
        tensors: dict[int, Tensor] = {loss.uid: loss}

        for record in reversed(self.records):
            gradient = values.get(record.output.uid)

            if gradient is None:
                continue

            arrays = tuple(tensor.data for tensor in record.inputs)
            input_gradients = record.operation.backward(gradient, record.saved, *arrays, **record.attributes)

            for tensor, input_gradient in zip(record.inputs, input_gradients):
                if not tensor.requires_grad or input_gradient is None:
                    continue

                input_gradient = np.asarray(input_gradient, dtype=tensor.data.dtype).reshape(tensor.shape)

                if tensor.uid in values:
                    values[tensor.uid] = values[tensor.uid] + input_gradient
                else:
                    values[tensor.uid] = input_gradient
                    tensors[tensor.uid] = tensor

        del values[loss.uid]
        tensors.pop(loss.uid, None)

        for tensor in wrt or ():
            if tensor.uid not in values:
                values[tensor.uid] = np.zeros_like(tensor.data)
                tensors[tensor.uid] = tensor

        return Gradients(values, tensors)
