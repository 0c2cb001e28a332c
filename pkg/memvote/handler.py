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

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import Any, TypeVar

from psutil import (
    cpu_count,
    virtual_memory,
)

__all__ = [
    'System',
]

Item = TypeVar('Item')
Result = TypeVar('Result')


class System:
    """
    Class that standardized methods of the processing system.
    """

    bytes_per_worker: int = 256 * 1024 * 1024
    """
    Memory reserved for each worker when deciding how many workers can run at the same time.
    """

    @classmethod
    def get_worker_count(cls, requested: int = 0) -> int:
        """
        Method to obtain how many workers should run in parallel.
        A `requested` value of zero or less means as many as physical cores and memory allow.
        """
        cores = cpu_count(logical=False) or cpu_count() or 1

        if requested > 0:
            return requested

        by_memory = max(1, virtual_memory().available // cls.bytes_per_worker)
        return int(max(1, min(cores, by_memory)))

    @classmethod
    def map(cls, function: Callable[[Item], Result], items: Iterable[Item], workers: int = 1) -> list[Result]:
        """
        Method to apply `function` to each item, in parallel when `workers` is greater than one.
        Results keep the order of `items` so they never depend on the worker count.
        """
        items = list(items)
        workers = cls.get_worker_count(workers)

        if workers == 1 or len(items) < 2:
            return [function(item) for item in items]

        logging.debug(f"Running {len(items)} tasks with {workers} workers.")

        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(function, items))

    @classmethod
    def describe(cls) -> dict[str, Any]:
        """
        Method to obtain a summary of the system used in reports.
        """
        return {
            'physical_cores': cpu_count(logical=False),
            'logical_cores': cpu_count(),
            'available_memory': virtual_memory().available,
        }
