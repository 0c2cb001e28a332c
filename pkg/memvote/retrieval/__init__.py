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
from dataclasses import dataclass
from importlib import import_module
from typing import Any, Type

import numpy as np
from numpy import ndarray

from ..exception import ContractViolation
from ..memory import Memory
from ..nn import Module, Parameter
from ..numerics import Tensor, functional as F

__all__ = [
    'CandidateSet',
    'Retriever',
    'memory_tables',
    'select_candidates',
    'similarity_row',
    'similarity_rows',
    'top_indices',
]


def similarity_rows(queries: Tensor, keys: Tensor) -> Tensor:
    """
    Function to compute the similarity rows of queries [L, C] against keys [C, N].
    Row i is [1, exp(q_i · k_1), ..., exp(q_i · k_N)] / C_i, computed through a softmax over [0, dots] so the
    maximum is subtracted before exponentiation. Entry 0 is the no-match entry.
    """
    if keys.ndim != 2 or keys.shape[1] == 0:
        raise ContractViolation(f"Similarity requires at least one memory key, not keys of shape {keys.shape}.")
    if queries.ndim != 2 or queries.shape[1] != keys.shape[0]:
        raise ContractViolation(f"Query shape {queries.shape} does not match key shape {keys.shape}.")

    dots = F.matmul(queries, keys)
    no_match = Tensor(np.zeros((queries.shape[0], 1)), dtype=dots.dtype)

    return F.softmax_row(F.concat([no_match, dots], axis=1))


def similarity_row(query: Tensor, keys: Tensor) -> Tensor:
    """
    Function to compute the similarity row of one query vector [C] against keys [N, C].
    """
    if keys.ndim != 2 or keys.shape[0] == 0:
        raise ContractViolation("Similarity requires at least one memory key.")

    rows = similarity_rows(F.reshape(query, (1, -1)), F.transpose(keys, (1, 0)))
    return F.reshape(rows, (-1,))


def top_indices(rows: ndarray, top_k: int) -> ndarray:
    """
    Function to obtain, for each row, the indexes of the `top_k` largest entries in decreasing order. Ties go to the
    smaller index. `top_k` is clamped to the row length.
    """
    if top_k <= 0:
        raise ContractViolation(f"The number of candidates must be at least 1, not {top_k}.")

    available = rows.shape[-1]
    if top_k > available:
        logging.warning(f"Requested {top_k} candidates but only {available} entries exist; using {available}.")
        top_k = available

    order = np.argsort(-np.asarray(rows), axis=-1, kind='stable')
    return order[..., :top_k]


@dataclass(frozen=True)
class CandidateSet:
    """
    The K selected entries of each similarity row: indexes (0 is no-match), their scores and the gathered values.
    """

    indices: ndarray
    scores: Tensor
    values: Tensor

    @property
    def size(self) -> int:
        return int(self.indices.shape[-1])


def select_candidates(rows: Tensor, values: Tensor, top_k: int, score_gate: bool = False) -> CandidateSet:
    """
    Function to select the `top_k` entries of each row [..., M] and gather their values from `values` [M, C_v], where
    row entry 0 maps to the no-match value. When `score_gate` is set each value is multiplied by a factor that is
    exactly one but carries the gradient of its score.
    """
    if values.ndim != 2 or values.shape[0] != rows.shape[-1]:
        raise ContractViolation(f"Values {values.shape} do not match similarity rows {rows.shape}.")

    indices = top_indices(rows.data, top_k)
    width = rows.shape[-1]
    count = indices.shape[-1]

    offsets = (np.arange(int(np.prod(indices.shape[:-1]))) * width)[:, None]
    flat = (indices.reshape(-1, count) + offsets).reshape(-1)

    scores = F.reshape(F.take(F.reshape(rows, (-1,)), flat), indices.shape)
    gathered = F.reshape(F.take(values, indices.reshape(-1), axis=0), (*indices.shape, values.shape[1]))

    if score_gate:
        constant = scores.detach()
        floor = np.maximum(constant.data, np.finfo(constant.dtype).tiny)
        gate = F.add(F.div(F.sub(scores, constant), floor), 1.0)
        gathered = F.mul(gathered, F.reshape(gate, (*indices.shape, 1)))

    return CandidateSet(indices, scores, gathered)


def memory_tables(memory: Memory, null_value: Tensor) -> tuple[Tensor, Tensor]:
    """
    Function to flatten the memory into keys [C_k, T H W] and values [T H W + 1, C_v], the latter with the no-match
    value in the first row. Entry j + 1 of a similarity row belongs to slot j // (H W), location j % (H W).
    """
    if len(memory) == 0:
        raise ContractViolation("Retrieval requires a memory with at least one slot.")

    keys = F.concat([F.reshape(key, (key.shape[0], -1)) for key in memory.keys()], axis=1)
    values = F.concat([F.reshape(value, (value.shape[0], -1)) for value in memory.values()], axis=1)
    values = F.concat([F.reshape(null_value, (1, -1)), F.transpose(values, (1, 0))], axis=0)

    return keys, values


class Retriever(Module):
    """
    Base class of the retrieval modes. Each location of the query is matched independently against every location
    of every memory slot.
    """

    mode: str | None = None
    """
    Attribute with the name used in configuration.
    """
    retrievers: dict[str, str] = {
        'voting': 'memvote.retrieval.voting.VotingRetriever',
        'softmax': 'memvote.retrieval.softmax.SoftmaxRetriever',
        'topk_mlp': 'memvote.retrieval.mlp.TopKMLPRetriever',
    }
    """
    Attribute with the dotted path of the retrievers available by mode.
    """

    def __init__(
        self,
        key_channels: int,
        value_channels: int,
        rng: np.random.Generator,
        dtype: Any = np.float64,
        score_gate: bool = True,
        **kwargs: Any,
    ) -> None:
        self.key_channels = key_channels
        self.value_channels = value_channels
        self.score_gate = score_gate
        self.null_value = Parameter(rng.normal(0.0, 0.1, value_channels), dtype=dtype)

    @classmethod
    def get_retriever(cls, mode: str) -> Type[Retriever]:
        """
        Method to obtain the retriever class of `mode`.
        """
        try:
            module_path, class_name = cls.retrievers[mode].rsplit('.', 1)
        except KeyError:
            raise ContractViolation(f"Unknown retrieval mode {mode!r}. Options are: {sorted(cls.retrievers)}.")

        return getattr(import_module(module_path), class_name)

    def forward(self, query: Tensor, memory: Memory, top_k: int) -> Tensor:
        """
        Method to retrieve a value map [C_v, H, W] for the query feature map [C_k, H, W].
        """
        if query.ndim != 3 or query.shape[0] != self.key_channels:
            raise ContractViolation(f"Retrieval expects a query with {self.key_channels} channels, not {query.shape}.")

        channels, height, width = query.shape
        keys, values = memory_tables(memory, self.null_value)
        queries = F.transpose(F.reshape(query, (channels, -1)), (1, 0))
        rows = similarity_rows(queries, keys)

        retrieved = self.combine(rows, values, queries, top_k)

        return F.reshape(F.transpose(retrieved, (1, 0)), (self.value_channels, height, width))

    def combine(self, rows: Tensor, values: Tensor, queries: Tensor, top_k: int) -> Tensor:
        """
        Method to turn similarity rows [L, M] and values [M, C_v] into one value vector per location [L, C_v].
        This method should be overwritten in child class.
        """
        raise NotImplementedError("The method combine should be override in child class.")

    @staticmethod
    def join_query(values: Tensor, queries: Tensor) -> Tensor:
        """
        Method to build the candidate tokens [L, K, C_v + C_k] as [value ∥ query].
        """
        locations, count, _ = values.shape
        channels = queries.shape[-1]
        repeated = F.broadcast_to(F.reshape(queries, (locations, 1, channels)), (locations, count, channels))

        return F.concat([values, repeated], axis=2)
