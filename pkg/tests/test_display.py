import io
import json

import numpy as np

from covconv.config import config
from covconv.display import display_suite, emit_json


# -------------------------
# JSON output
# -------------------------


def test_emit_json_converts_arrays():
    stream = io.StringIO()

    emit_json({"end": np.array([1.0, 2.0]), "n": np.int64(3)}, stream)

    assert json.loads(stream.getvalue()) == {"end": [1.0, 2.0], "n": 3}


def test_emit_json_stdout(capsys):
    emit_json({"a": 1})

    assert json.loads(capsys.readouterr().out) == {"a": 1}


# -------------------------
# Suite display
# -------------------------


def passing(name):
    return {"check": name, "status": "pass", "max_abs_error": 1e-12, "tolerance": 1e-10, "wall_time_s": 0.02}


def test_display_suite_all_pass(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(config, "export_dir", tmp_path)

    ok = display_suite("SuiteTest", [("flat", passing("flat")), ("holonomy", passing("holonomy"))])

    captured = capsys.readouterr()

    assert ok is True
    assert "SuiteTest" in captured.out
    assert "flat" in captured.out

    file = tmp_path / "suite_report.json"
    assert file.exists()

    saved = json.loads(file.read_text())
    assert saved["passed"] is True
    assert set(saved["results"]) == {"flat", "holonomy"}


def test_display_suite_with_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(config, "export_dir", tmp_path)

    ok = display_suite("SuiteTest", [("flat", passing("flat")), ("broken [ERROR]", {"error": "Config error: x"})])

    captured = capsys.readouterr()

    assert ok is False
    assert "Config error" in captured.out


def test_display_suite_with_failure(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(config, "export_dir", tmp_path)
    failing = dict(passing("holonomy"), status="fail", max_abs_error=1.0)

    assert display_suite("SuiteTest", [("holonomy", failing)]) is False
    assert "fail" in capsys.readouterr().out
