# -*- coding: utf-8 -*-
"""Тесты форматов файлов: CSV, JSON, JSON-lines."""

import io
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from qlasso.exceptions import ValidationError
from qlasso.interfaces import IndexSet
from qlasso.io_formats import (
    JsonLinesWriter,
    dumps_json,
    read_design,
    read_json,
    read_jsonl,
    read_matrix,
    read_response,
    read_vector,
    to_jsonable,
    write_coefficients_csv,
    write_json,
    write_jsonl,
    write_matrix_csv,
    write_response_csv,
)


class TestCsv:
    def test_design_is_exact(self, tmp_path, rng):
        X = rng.standard_normal((7, 3))
        path = write_matrix_csv(tmp_path / "X.csv", X)
        assert path.read_text().splitlines()[0] == 'x1,x2,x3'
        assert_array_equal(read_design(path).X, X)

    def test_response(self, tmp_path):
        path = write_response_csv(tmp_path / "y.csv", [1.0, 2.5])
        assert_array_equal(read_response(path, n=2), [1.0, 2.5])
        with pytest.raises(ValidationError):
            read_response(path, n=3)

    def test_response_without_y_column(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("value\n1\n2\n")
        assert_array_equal(read_response(path), [1.0, 2.0])
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValidationError):
            read_response(path)

    def test_coefficients_as_vector(self, tmp_path):
        path = write_coefficients_csv(tmp_path / "beta.csv", [0.5, 0.0, -1.0])
        assert path.read_text().splitlines()[:2] == ['j,beta', '1,0.5']
        assert_array_equal(read_vector(path, length=3), [0.5, 0.0, -1.0])
        with pytest.raises(ValidationError):
            read_vector(path, length=2)

    def test_matrix_shape(self, tmp_path):
        path = write_matrix_csv(tmp_path / "S.csv", np.eye(2), columns=['a', 'b'])
        assert_array_equal(read_matrix(path, shape=(2, 2)), np.eye(2))
        with pytest.raises(ValidationError):
            read_matrix(path, shape=(3, 3))

    @pytest.mark.parametrize("text", [
        "x1,x2\n1,abc\n2,3\n",
        "x1,x2\n1,\n2,3\n",
        "x1,x2\n1,inf\n2,3\n",
        "x1,x2\n",
    ])
    def test_bad_design(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(ValidationError):
            read_design(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_design(tmp_path / "missing.csv")


class TestJson:
    def test_jsonable(self):
        data = to_jsonable({
            'a': np.array([1.0, np.inf]),
            'b': np.float64(math.nan),
            'c': (np.int64(2), np.bool_(True)),
            'd': IndexSet.of([2, 0]).indices,
        })
        assert data == {'a': [1.0, None], 'b': None, 'c': [2, True], 'd': [0, 2]}

    def test_objects_with_to_dict(self):
        class Result:
            def to_dict(self):
                return {'value': np.float64(0.1)}

        assert json.loads(dumps_json([Result()])) == [{'value': 0.1}]

    def test_float_repr_round_trips(self, tmp_path):
        value = 2 / 13
        path = write_json(tmp_path / "out.json", {'phi_sq': value})
        assert read_json(path)['phi_sq'] == value

    def test_floats_round_trip_bitwise(self, rng):
        values = np.concatenate([rng.standard_normal(500) * 10.0 ** rng.integers(-300, 300, 500),
                                 [0.1, 2 / 13, 5e-324, -0.0]])
        restored = json.loads(dumps_json(values, indent=None))
        assert_array_equal(np.array(restored).view(np.uint64), values.view(np.uint64))
        assert dumps_json(0.1) == '0.1'

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            read_json(path)


class TestJsonLines:
    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "records.jsonl"
        count = write_jsonl(path, [{'i': 0}, {'i': 1, 'x': np.float64(0.5)}])
        assert count == 2
        assert read_jsonl(path) == [{'i': 0}, {'i': 1, 'x': 0.5}]

    def test_stream_target(self):
        stream = io.StringIO()
        with JsonLinesWriter(stream) as writer:
            writer.write({'a': 1})
            writer.write({'a': 2})
        assert stream.getvalue() == '{"a": 1}\n{"a": 2}\n'
        assert not stream.closed

    def test_write_outside_context(self, tmp_path):
        writer = JsonLinesWriter(tmp_path / "r.jsonl")
        with pytest.raises(ValidationError):
            writer.write({'a': 1})

    def test_bad_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"a": 1}\n\n{broken\n')
        with pytest.raises(ValidationError):
            read_jsonl(path)
