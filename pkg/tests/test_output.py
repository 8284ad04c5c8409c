"""Artifact formatting and deterministic file output."""

import json
import math

import numpy as np
import pytest

from qarsim import ConfigurationError
from qarsim.output import (
    LinePlot,
    TableArtifact,
    format_value,
    render_svg,
    write_csv,
    write_json,
)


def test_format_value_covers_the_cell_types():
    assert format_value("label") == "label"
    assert format_value(True) == "true"
    assert format_value(False) == "false"
    assert format_value(7) == "7"
    assert format_value(np.int64(7)) == "7"
    assert format_value(float("nan")) == "nan"
    # 12 significant digits in scientific notation
    assert format_value(1.0 / 3.0) == "3.33333333333e-01"
    assert format_value(np.float64(21.424)) == "2.14240000000e+01"


def test_table_artifact_validates_row_widths():
    TableArtifact("t", ("a", "b"), ((1, 2), (3, 4)))
    with pytest.raises(ConfigurationError):
        TableArtifact("t", ("a", "b"), ((1, 2, 3),))


def test_table_artifact_column_lookup():
    art = TableArtifact("t", ("a", "b"), ((1.0, 2.0), (3.0, 4.0)))
    assert np.allclose(art.column("b"), (2.0, 4.0))
    with pytest.raises(ConfigurationError):
        art.column("c")


def test_write_csv_layout(tmp_path):
    art = TableArtifact("t", ("n_hot", "p1"), ((21.424, 1e-3), (0.16, float("nan"))))
    path = tmp_path / "t.csv"
    write_csv(str(path), art)
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == "n_hot,p1"
    assert lines[1] == "2.14240000000e+01,1.00000000000e-03"
    assert lines[2].endswith(",nan")
    assert text.endswith("\n")


def test_write_json_sanitizes_numpy_and_nan(tmp_path):
    payload = {
        "a": np.float64(1.5),
        "b": np.int64(3),
        "c": float("nan"),
        "d": np.arange(3),
        "nested": {"x": (np.float64(0.5),)},
    }
    path = tmp_path / "p.json"
    write_json(str(path), payload)
    loaded = json.loads(path.read_text())
    assert loaded["a"] == 1.5
    assert loaded["b"] == 3
    assert loaded["c"] is None
    assert loaded["d"] == [0, 1, 2]
    assert loaded["nested"]["x"] == [0.5]
    # keys are sorted for reproducible bytes
    assert list(loaded) == sorted(loaded)


def test_write_json_is_byte_stable(tmp_path):
    payload = {"z": 1.0, "a": {"k": [1, 2, 3]}}
    p1, p2 = tmp_path / "one.json", tmp_path / "two.json"
    write_json(str(p1), payload)
    write_json(str(p2), payload)
    assert p1.read_bytes() == p2.read_bytes()


def test_render_svg_is_deterministic(tmp_path):
    x = np.linspace(0.0, 1e-6, 20)
    rows = tuple((t, math.exp(-t * 2e6)) for t in x)
    art = TableArtifact(
        "trace",
        ("time_s", "p1"),
        rows,
        plot=LinePlot(x="time_s", ys=("p1",), xlabel="time (s)", ylabel="p1", logy=True),
    )
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    render_svg(str(p1), art)
    render_svg(str(p2), art)
    content = p1.read_text()
    assert content.lstrip().startswith("<?xml")
    assert p1.read_bytes() == p2.read_bytes()
