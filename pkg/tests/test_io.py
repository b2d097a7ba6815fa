import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from phasebound.io import dumps, fmt, read_csv, write_csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(fmt(v)) == v


def test_dumps_handles_numpy_and_nonfinite():
    text = dumps({"a": np.float64(0.1), "b": [np.int64(3), math.inf], "c": True, "d": None})
    assert '"a": 0.10000000000000001' in text
    assert '"b": [\n    3,\n    null\n  ]' in text
    assert '"c": true' in text


def test_csv_round_trip(tmp_path):
    rows = np.random.default_rng(0).standard_normal((5, 2))
    path = write_csv(tmp_path / "t.csv", ["x", "y"], rows.tolist(), {"p_y": 0.1, "note": "hello"})
    header, cols, data = read_csv(path)
    assert header == {"p_y": "0.10000000000000001", "note": "hello"}
    assert cols == ["x", "y"]
    assert np.array_equal(data, rows)
