import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from subclass_kd.io import confusion_svg, dumps, matrix_csv, write_atomic


def test_dumps_sorted_and_numpy_aware():
    text = dumps({"b": np.float64(0.1), "a": np.arange(3)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1, 2], "b": 0.1}
    assert text.endswith("\n")


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps({"x": math.nan})


def test_write_atomic_leaves_no_temp_files(tmp_path):
    p = write_atomic(tmp_path / "sub" / "f.txt", "hello")
    assert p.read_text() == "hello"
    write_atomic(p, "again")
    assert p.read_text() == "again"
    assert [f.name for f in p.parent.iterdir()] == ["f.txt"]


def test_matrix_csv_six_decimals():
    assert matrix_csv([[1, 0], [1 / 3, 2 / 3]]) == "1.000000,0.000000\n0.333333,0.666667\n"


def test_svg_is_well_formed():
    svg = confusion_svg([[0.9, 0.1], [0.2, 0.8]], ["HP", "S<SA"], "t & t")
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f"{ns}rect")) == 4
    assert "0.90" in svg and "S&lt;SA" in svg
