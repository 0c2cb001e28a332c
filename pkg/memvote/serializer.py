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

import inspect
from dataclasses import asdict, is_dataclass
from importlib import import_module
from typing import Any

from json_tricks import (
    loads as json_loads,
    dumps as json_dumps,
    hashodict,
)

from .exception import SerializerError

__all__ = [
    'JSONSerializer',
]


class JSONSerializer:
    """
    Class that allow handling of Serialization/Deserialization from object to json string and from it to object.
    Numpy arrays are stored with dtype and shape so that checkpoints restore values bit-identically.
    """

    @classmethod
    def serialize(cls, source: Any, primitives: bool = False, indent: int | None = None) -> str:
        """
        Method to serialize the input `source` using json_tricks as extension to `json`.
        When `primitives` is set, arrays are written as plain lists and classes as dotted paths, which is used for
        human-readable lines like the training log and evaluation reports.
        """

        def json_dataclass_encode(obj: object, primitives: bool = False) -> object:
            """
            Internal function to encode configuration dataclasses as plain dictionaries.
            """
            if is_dataclass(obj) and not isinstance(obj, type):
                return asdict(obj)

            return obj

        def json_class_encode(obj: object, primitives: bool = False) -> object | str | hashodict:
            """
            Internal function to encode a class reference.
            """
            if inspect.isclass(obj):
                if primitives:
                    return f"{obj.__module__}.{obj.__name__}"

                return hashodict([('__class__', None), ('module', obj.__module__), ('name', obj.__name__)])

            return obj

        try:
            return json_dumps(
                source,
                extra_obj_encoders=(json_dataclass_encode, json_class_encode),
                primitives=primitives,
                indent=indent,
                allow_nan=False,
            )
        except (TypeError, ValueError) as e:
            raise SerializerError(f"Could not serialize {type(source).__name__}: {e}") from e

    @classmethod
    def deserialize(cls, source: str | bytes) -> Any:
        """
        Method to deserialize the input `source` using json_tricks as extension to `json`.
        """

        def json_class_hook(dct: object) -> dict | object:
            """
            Internal function to parse the __class__ dictionary.
            """
            if not isinstance(dct, dict):
                return dct

            if "__class__" in dct:
                return getattr(import_module(dct.get('module')), dct.get('name'))

            return dct

        if isinstance(source, bytes):
            source = source.decode('utf-8')

        try:
            return json_loads(source, preserve_order=False, extra_obj_pairs_hooks=(json_class_hook,))
        except (TypeError, ValueError, AttributeError, ImportError) as e:
            raise SerializerError(f"Could not deserialize content: {e}") from e
