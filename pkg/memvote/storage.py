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

# Python internals
from __future__ import annotations

import os
from glob import iglob
from io import open
from os.path import (
    abspath,
    basename,
    exists,
    isdir,
    join,
    normpath,
)
from typing import Any, Generator, Iterable, TYPE_CHECKING

if TYPE_CHECKING:
    from io import BytesIO, StringIO


__all__ = [
    'Storage',
]


class Storage:
    """
    Class that standardized methods of the file system.
    Every file read or written by the package passes through this class.
    """

    sep: str = os.sep
    """
    Directory separator in the filesystem.
    """
    encoding: str = 'utf-8'
    """
    Encoding used for text files.
    """
    image_extensions: tuple[str, ...] = ('.jpg', '.jpeg', '.png', '.bmp')
    """
    Extensions identified as frame images when listing a sequence directory.
    """

    @classmethod
    def is_dir(cls, path: str) -> bool:
        """
        The default implementation uses `os.path` operations.
        Override this method if that’s not appropriate for your storage.
        """
        return isdir(cls.get_absolute_path(path))

    @classmethod
    def is_file(cls, path: str) -> bool:
        """
        The default implementation uses `os.path` operations.
        Override this method if that’s not appropriate for your storage.
        """
        return cls.exists(path) and not cls.is_dir(path)

    @classmethod
    def exists(cls, path: str) -> bool:
        """
        The default implementation uses `os.path` operations.
        Override this method if that’s not appropriate for your storage.
        """
        return exists(path)

    @classmethod
    def create_directory(cls, path: str, mode: int = 0o777) -> bool:
        """
        Method to create directory in the file system.
        This method will try to create a directory only if it not exists already.
        Override this method if that’s not appropriate for your storage.
        """
        if not path:
            raise ValueError("Is necessary the receive a folder name on create_directory method.")

        if not cls.exists(path):
            os.makedirs(path, mode)
            return True

        return False

    @classmethod
    def open_file(cls, path: str, mode: str = 'rb') -> StringIO | BytesIO:
        """
        Method to return a buffer to a file. This method don't automatically closes file buffer.
        Override this method if that’s not appropriate for your storage.
        """
        if 'b' in mode:
            return open(path, mode=mode)

        return open(path, mode=mode, encoding=cls.encoding)

    @classmethod
    def read_text(cls, path: str) -> str:
        """
        Method to read the whole content of a text file.
        """
        with cls.open_file(path, mode='r') as file_pointer:
            return file_pointer.read()

    @classmethod
    def read_lines(cls, path: str) -> Generator[str]:
        """
        Method to read lines from a file without the line terminators.
        """
        with cls.open_file(path, mode='r') as file_pointer:
            for line in file_pointer:
                yield line.rstrip('\r\n')

    @classmethod
    def save_file(cls, path: str, content: Iterable[Any], **kwargs: Any) -> None:
        """
        Method to save content on file.
        This method will throw an exception if content is not iterable.
        Override this method if that’s not appropriate for your storage.
        """
        content = iter(content)

        if 'file_mode' not in kwargs:
            kwargs['file_mode'] = 'w'

        if 'write_mode' not in kwargs:
            kwargs['write_mode'] = 'b'

        mode = kwargs['file_mode'] + kwargs['write_mode']
        directory = cls.get_directory_from_path(path)
        if directory:
            cls.create_directory(directory)

        with cls.open_file(path, mode) as file_pointer:
            for chunk in content:
                file_pointer.write(chunk)

    @classmethod
    def save_text(cls, path: str, text: str) -> None:
        """
        Method to replace the content of a text file.
        """
        cls.save_file(path, (text,), file_mode='w', write_mode='t')

    @classmethod
    def append_line(cls, path: str, line: str) -> None:
        """
        Method to append one line to a text file, used by line-oriented logs.
        """
        cls.save_file(path, (line, "\n"), file_mode='a', write_mode='t')

    @classmethod
    def join(cls, *paths: str) -> str:
        """
        Method used to concatenate two or more paths.
        Override this method if that’s not appropriate for your storage.
        """
        return join(*paths)

    @classmethod
    def list_files(cls, path: str, filter_pattern: str = "*") -> Generator[str]:
        """
        Method used to list files following pattern in filter, sorted by name.
        Override this method if that’s not appropriate for your storage.
        """
        for file in sorted(iglob(filter_pattern, root_dir=path)):
            if cls.is_file(cls.join(path, file)):
                yield file

    @classmethod
    def list_directories(cls, path: str) -> list[str]:
        """
        Method used to list the directories inside `path`, sorted by name.
        """
        return sorted(entry for entry in iglob("*", root_dir=path) if cls.is_dir(cls.join(path, entry)))

    @classmethod
    def list_images(cls, path: str) -> list[str]:
        """
        Method used to list the image files inside `path` sorted by name.
        """
        return [
            file for file in cls.list_files(path)
            if os.path.splitext(file)[1].lower() in cls.image_extensions
        ]

    @classmethod
    def get_filename_from_path(cls, path: str) -> str:
        """
        Method to return the filename from path.
        """
        return basename(path)

    @classmethod
    def get_directory_from_path(cls, path: str) -> str:
        """
        Method to return the directory from path.
        """
        return os.path.dirname(path)

    @classmethod
    def get_absolute_path(cls, path: str) -> str:
        """
        Method to return the absolute path.
        """
        return normpath(abspath(path))
