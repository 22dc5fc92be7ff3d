import argparse
import json
import math

import numpy as np
import pytest

from covconv.config import config
from covconv.exporters import DataExporter
from covconv.tensors import SCALAR, VECTOR
from covconv.utils import format_duration, parse_points, parse_vector, to_jsonable


# =====================================================
# EXPORTER TESTS
# =====================================================


def test_save_json_pretty(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "export_dir", tmp_path)

    data = {"a": 1, "b": 2}
    filepath = DataExporter.save_json(data, "testfile")

    file = tmp_path / "testfile.json"

    assert file.exists()
    assert filepath == str(file)

    content = json.loads(file.read_text())
    assert content == data


def test_save_json_compact(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "export_dir", tmp_path)

    data = {"x": 10}
    DataExporter.save_json(data, "compact", pretty=False)

    file = tmp_path / "compact.json"
    text = file.read_text()

    assert "\n    " not in text
    assert json.loads(text) == data


def test_save_points_csv_in_export_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "export_dir", tmp_path)

    filepath = DataExporter.save_points_csv([[0.0, 1.0], [2.0, 3.0]], [[1.0, 0.0], [0.0, 1.0]], VECTOR, "out.csv")

    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert filepath == str(tmp_path / "out.csv")
    assert lines[0] == "coord1,coord2,out_0,out_1"
    assert np.allclose([float(v) for v in lines[2].split(",")], [2.0, 3.0, 0.0, 1.0])


def test_save_points_csv_scalar(tmp_path):
    target = tmp_path / "sub.csv"

    DataExporter.save_points_csv([[0.0, 1.0]], [5.0], SCALAR, target)

    assert target.read_text().splitlines()[0] == "coord1,coord2,out_"


# =====================================================
# UTILS TESTS: parsing
# =====================================================


def test_parse_vector():
    assert parse_vector("1.5,0") == [1.5, 0.0]
    assert parse_vector("pi/2, -pi") == pytest.approx([math.pi / 2, -math.pi])
    assert parse_vector("2pi/3") == pytest.approx([2 * math.pi / 3])


def test_parse_vector_invalid():
    with pytest.raises(argparse.ArgumentTypeError):
        parse_vector("one,two")


def test_parse_points():
    assert parse_points("0,0;1,0.5") == [[0.0, 0.0], [1.0, 0.5]]


# =====================================================
# UTILS TESTS: formatting
# =====================================================


def test_format_duration():
    assert format_duration(0.0125) == "12.5 ms"
    assert format_duration(2.5) == "2.50 s"
    assert format_duration(75.0) == "1:15.00"


def test_to_jsonable():
    converted = to_jsonable({"a": np.array([1.0]), 2: (np.float64(0.5), np.int32(4))})

    assert converted == {"a": [1.0], "2": [0.5, 4]}
    assert json.dumps(converted)
