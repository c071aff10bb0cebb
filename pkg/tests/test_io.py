import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from glwire.io import content_hash, read_csv, read_field, rle_decode, rle_encode, write_csv, write_field, write_json


@given(arrays(bool, st.tuples(st.integers(0, 12), st.integers(0, 12))))
def test_rle_round_trip(mask):
    code = rle_encode(mask)
    assert sum(code["runs"]) == mask.size
    assert np.array_equal(rle_decode(code), mask)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(allow_nan=False)))
@settings(max_examples=25)
def test_field_round_trip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("f") / "a.f8"
    write_field(p, a, {"name": "a"})
    b, meta = read_field(p)
    assert np.array_equal(a, b) and meta == {"name": "a"}


def test_field_hash_checked(tmp_path):
    p = tmp_path / "x.f8"
    write_field(p, np.arange(6.0).reshape(2, 3))
    raw = bytearray(p.read_bytes())
    raw[0] ^= 1
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        read_field(p)


def test_csv_embeds_config_and_hash(tmp_path):
    p = tmp_path / "t.csv"
    digest = write_csv(p, ["a", "b"], [(1, 0.5), (2, float("nan"))], {"k": 1})
    lines = p.read_text().splitlines()
    assert lines[0] == f"# sha256: {digest}"
    assert json.loads(lines[1][len("# config: "):]) == {"k": 1}
    body = "\n".join(lines[2:]) + "\n"
    assert content_hash(body) == digest
    header, rows = read_csv(p)
    assert header == ["a", "b"] and rows[1] == ["2", "nan"]


def test_outputs_deterministic(tmp_path):
    rows = [(0.1, 1e-300, True), (3, -2.5e17, False)]
    write_csv(tmp_path / "a.csv", ["x", "y", "z"], rows, {"s": {"b": 2, "a": 1}})
    write_csv(tmp_path / "b.csv", ["x", "y", "z"], rows, {"s": {"a": 1, "b": 2}})
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_json(tmp_path / "a.json", {"v": np.float64(0.1), "m": np.arange(3)}, {"c": 1})
    write_json(tmp_path / "b.json", {"m": [0, 1, 2], "v": 0.1}, {"c": 1})
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert set(doc) == {"data", "sha256", "config"}
