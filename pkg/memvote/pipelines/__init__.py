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

from dataclasses import dataclass, field
from importlib import import_module
from inspect import isclass
from typing import Any, Iterator

import numpy as np

from ..exception import ImproperlyConfigured

__all__ = [
    'Pipeline',
    'PipelineRun',
    'Processor',
]


@dataclass
class PipelineRun:
    """
    Record of one pass of a pipeline over a sample.
    """

    applied: list[bool] = field(default_factory=list)
    errors: list[Exception] = field(default_factory=list)


class Processor:
    """
    Class that binds a processor class, the one implementing `process`, to the parameters it is run with.
    """

    def __init__(self, source: Any, parameters: dict[str, Any] | None = None) -> None:
        if isinstance(source, str):
            source = self.get_classname(source)
        elif not isclass(source):
            raise ImproperlyConfigured(f"Source parameter at Processor should be a string of dotted path or a class "
                                       f"not {type(source)}!")

        if not hasattr(source, 'process'):
            raise ImproperlyConfigured(f"Class {source.__name__} should implement the method `process` to be "
                                       f"a valid processor class.")

        self.classname: type = source
        self.parameters: dict[str, Any] = dict(parameters or {})

    @staticmethod
    def get_classname(dotted_path: str) -> type:
        """
        Method to obtain and import the processor`s class from the path informed at `dotted_path`.
        """
        try:
            module_path, class_name = dotted_path.rsplit('.', 1)
            return getattr(import_module(module_path), class_name)
        except (ValueError, AttributeError, ModuleNotFoundError):
            raise ImproperlyConfigured(f"Was not possible to import processor {dotted_path}. Make sure that "
                                       f"{dotted_path} is a python string with dotted path to a processor class.")


class Pipeline:
    """
    Class with an ordered sequence of processors run over one sample at a time.
    A pipeline keeps no state between runs, so the same object can be shared by threads sampling clips.
    """

    def __init__(self, *processors_candidate: Any) -> None:
        """
        Each candidate is either a processor class, the dotted path to it, or a tuple with one of those and the
        dictionary of parameters it is run with.
        """
        if not processors_candidate:
            raise ImproperlyConfigured("A processor candidate must be informed for pipeline to be initialized")

        self.processors: list[Processor] = []

        for candidate in processors_candidate:
            if isinstance(candidate, (tuple, list)):
                self.processors.append(Processor(candidate[0], candidate[1]))
            else:
                self.processors.append(Processor(candidate))

    def __getitem__(self, item: int) -> Processor:
        return self.processors[item]

    def __iter__(self) -> Iterator[Processor]:
        return iter(self.processors)

    def __len__(self) -> int:
        return len(self.processors)

    def run(self, object_to_process: Any, rng: np.random.Generator, **parameters: Any) -> PipelineRun:
        """
        Method to run every processor, in order, over `object_to_process`.
        All processors draw from the same `rng`, so the outcome of a run depends only on the state of the
        stream and the sample.
        """
        run = PipelineRun()

        for processor in self.processors:
            applied = processor.classname.process(
                object_to_process=object_to_process,
                rng=rng,
                errors=run.errors,
                **processor.parameters,
                **parameters,
            )
            run.applied.append(bool(applied))

        return run
