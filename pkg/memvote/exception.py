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

__all__ = [
	'CheckpointError',
	'ContractViolation',
	'DataError',
	'ImproperlyConfigured',
	'MemVoteError',
	'NumericFault',
	'ParseError',
	'SerializerError',
]


class MemVoteError(Exception):
	"""
	Exception that all errors raised by the package inherent from.
	"""


class SerializerError(MemVoteError):
	"""
	Exception that defines errors for when a serialization problem occur in a container.
	"""


class ContractViolation(MemVoteError, ValueError):
	"""
	Exception that defines errors for when an operation receives input that breaks its preconditions,
	like mismatched shapes, invalid boxes or non-monotone frame indexes.
	"""


class NumericFault(MemVoteError, ArithmeticError):
	"""
	Exception that defines errors for when a computation produces a non-finite value (NaN or Inf).
	"""


class ImproperlyConfigured(MemVoteError):
	"""
	Exception that defines error for when a configuration has an unknown key or an invalid value.
	"""


class DataError(MemVoteError):
	"""
	Exception that defines error for when dataset files are missing or inconsistent.
	"""


class ParseError(DataError):
	"""
	Exception that defines error for when a line of a text file could not be parsed.
	The attributes `path` and `line_number` identify the offending line.
	"""

	def __init__(self, message: str, path: str | None = None, line_number: int | None = None) -> None:
		self.path = path
		self.line_number = line_number

		location = ""
		if path is not None:
			location = f"{path}:"
		if line_number is not None:
			location += f"{line_number}:"

		super().__init__(f"{location} {message}" if location else message)


class CheckpointError(MemVoteError):
	"""
	Exception that defines error for when a checkpoint is missing, corrupt or of an unsupported version.
	"""
