from __future__ import annotations

import math

import numpy as np
import pytest

from memvote.anchors import BBox
from memvote.config import MemoryConfig
from memvote.exception import SerializerError
from memvote.serializer import JSONSerializer
from memvote.storage import Storage
from memvote.tracker import TrackResult, read_predictions, write_predictions


class TestJSONSerializer:
    def test_arrays_keep_dtype_and_bits(self) -> None:
        array = np.random.default_rng(0).normal(size=(3, 4)).astype(np.float32)
        restored = JSONSerializer.deserialize(JSONSerializer.serialize({'weight': array}))['weight']

        assert restored.dtype == np.float32
        assert restored.shape == (3, 4)
        np.testing.assert_array_equal(restored, array)

    def test_primitives_write_plain_lists(self) -> None:
        text = JSONSerializer.serialize({'values': np.array([1.5, 2.0])}, primitives=True)
        assert JSONSerializer.deserialize(text) == {'values': [1.5, 2.0]}

    def test_dataclasses_become_dictionaries(self) -> None:
        data = JSONSerializer.deserialize(JSONSerializer.serialize(MemoryConfig(capacity=3)))

        assert data['capacity'] == 3
        assert data['training_writes'] == 'always'

    def test_classes_round_trip(self) -> None:
        assert JSONSerializer.deserialize(JSONSerializer.serialize({'type': BBox}))['type'] is BBox
        assert JSONSerializer.serialize(BBox, primitives=True) == '"memvote.anchors.BBox"'

    def test_non_finite_numbers_are_refused(self) -> None:
        with pytest.raises(SerializerError):
            JSONSerializer.serialize({'loss': math.nan})

    def test_unserializable(self) -> None:
        with pytest.raises(SerializerError):
            JSONSerializer.serialize({'handle': object()})

    @pytest.mark.parametrize('content', ['{"a": ', b'\xff\xfe', 'not json'])
    def test_invalid_content(self, content: str | bytes) -> None:
        with pytest.raises((SerializerError, UnicodeDecodeError)):
            JSONSerializer.deserialize(content)


class TestStorage:
    def test_text_and_lines(self, tmp_path: object) -> None:
        path = Storage.join(str(tmp_path), 'nested', 'log.jsonl')

        Storage.append_line(path, '{"step": 1}')
        Storage.append_line(path, '{"step": 2}')

        assert list(Storage.read_lines(path)) == ['{"step": 1}', '{"step": 2}']
        Storage.save_text(path, 'replaced\n')
        assert Storage.read_text(path) == 'replaced\n'

    def test_listing(self, tmp_path: object) -> None:
        root = str(tmp_path)
        for name in ('b.png', 'a.JPG', 'notes.txt'):
            Storage.save_text(Storage.join(root, name), 'x')
        Storage.create_directory(Storage.join(root, 'sub'))

        assert Storage.list_images(root) == ['a.JPG', 'b.png']
        assert Storage.list_directories(root) == ['sub']
        assert list(Storage.list_files(root, '*.txt')) == ['notes.txt']

    def test_create_directory(self, tmp_path: object) -> None:
        path = Storage.join(str(tmp_path), 'a', 'b')

        assert Storage.create_directory(path)
        assert not Storage.create_directory(path)
        assert Storage.is_dir(path) and not Storage.is_file(path)

        with pytest.raises(ValueError):
            Storage.create_directory('')


class TestPredictionFiles:
    def test_write_and_read(self, tmp_path: object) -> None:
        path = str(tmp_path / 'walk.txt')
        results = [
            TrackResult(0, BBox(10.0, 20.0, 4.0, 6.0), 1.0),
            TrackResult(1, BBox(12.5, 21.0, 5.0, 6.0), 0.25),
        ]

        write_predictions(path, results)

        assert list(Storage.read_lines(path))[0] == '0,8.0000,17.0000,4.0000,6.0000,1.000000'

        indexes, boxes, scores = read_predictions(path)
        np.testing.assert_array_equal(indexes, [0, 1])
        np.testing.assert_allclose(boxes, [[10.0, 20.0, 4.0, 6.0], [12.5, 21.0, 5.0, 6.0]])
        np.testing.assert_allclose(scores, [1.0, 0.25])

    def test_bad_lines_count_as_failures(self, tmp_path: object, caplog: pytest.LogCaptureFixture) -> None:
        path = str(tmp_path / 'broken.txt')
        Storage.save_text(path, '0,1,1,4,4,0.9\n\n1,oops,1,4,4,0.9\n2,1,1\n')

        indexes, boxes, scores = read_predictions(path)

        assert len(boxes) == 3
        np.testing.assert_array_equal(boxes[1], np.zeros(4))
        np.testing.assert_array_equal(boxes[2], np.zeros(4))
        assert scores[1] == 0.0
        assert 'broken.txt:3' in caplog.text
        assert 'broken.txt:4' in caplog.text
