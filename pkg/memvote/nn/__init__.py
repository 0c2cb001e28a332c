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

from typing import Any, Iterator

import numpy as np
from numpy import ndarray

from ..exception import CheckpointError
from ..numerics import Tensor

__all__ = [
    'Module',
    'Parameter',
]


class Parameter(Tensor):
    """
    Class for trainable tensors. Parameters are the only tensors whose values are replaced after creation,
    through `assign`, by the single writer that owns them (the optimizer or a checkpoint restore).
    """

    def __init__(self, data: Any, dtype: Any = None) -> None:
        super().__init__(data, requires_grad=True, dtype=dtype)

    def assign(self, array: ndarray) -> None:
        """
        Method to replace the values keeping shape and dtype.
        """
        array = np.array(array, dtype=self.data.dtype, copy=True)

        if array.shape != self.data.shape:
            raise CheckpointError(f"Parameter {self.name} expects shape {self.data.shape}, not {array.shape}.")

        array.flags.writeable = False
        self.data = array


class Module:
    """
    Base class for network components. Parameters and sub modules are discovered from the instance attributes in
    definition order, which makes parameter names (dotted paths) deterministic.
    """

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        """
        Method to run the component.
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method forward should be override in child class.")

    def named_parameters(self, prefix: str = '') -> Iterator[tuple[str, Parameter]]:
        """
        Method to iterate over (dotted name, parameter) pairs, naming the parameters on the way.
        """
        for attribute, value in vars(self).items():
            name = f"{prefix}{attribute}"

            if isinstance(value, Parameter):
                value.name = name
                yield name, value

            elif isinstance(value, Module):
                yield from value.named_parameters(prefix=f"{name}.")

            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{name}.{index}.")
                    elif isinstance(item, Parameter):
                        item.name = f"{name}.{index}"
                        yield item.name, item

    def parameters(self) -> list[Parameter]:
        return [parameter for _, parameter in self.named_parameters()]

    def state_dict(self) -> dict[str, ndarray]:
        """
        Method to obtain a copy of every parameter value keyed by its name.
        """
        return {name: parameter.numpy() for name, parameter in self.named_parameters()}

    def load_state_dict(self, state: dict[str, ndarray]) -> None:
        """
        Method to replace every parameter value. Names must match exactly.
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))

        if missing or unexpected:
            raise CheckpointError(f"Parameters do not match the network. Missing: {missing[:5]}, "
                                  f"unexpected: {unexpected[:5]}.")

        for name, parameter in own.items():
            parameter.assign(state[name])

    def count_parameters(self) -> int:
        return sum(parameter.size for parameter in self.parameters())
