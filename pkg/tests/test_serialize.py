import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from planewave.serialize import cascade_filename, dumps_csv, dumps_json, fmt_float


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(v):
    assert float(fmt_float(v)) == v


def test_seventeen_digits():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(-0.0) == "0"


def test_json_is_valid_and_ordered():
    text = dumps_json({"b": 1, "a": [0.5, None, True], "c": {"x": np.float64(2.0)}, "n": float("nan")})
    assert text.endswith("\n")
    data = json.loads(text)
    assert list(data) == ["b", "a", "c", "n"]
    assert data["n"] is None and data["c"]["x"] == 2.0


def test_csv_format():
    text = dumps_csv(["x", "y"], [(0.5, None), (1, float("inf"))])
    assert text == "x,y\n0.5,\n1,\n"
    assert "\r" not in text


@pytest.mark.parametrize("n, name", [(1, "cascade_+1.csv"), (-4, "cascade_-4.csv")])
def test_cascade_names(n, name):
    assert cascade_filename(n) == name
