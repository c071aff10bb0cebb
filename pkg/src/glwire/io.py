"""File formats: raw field dumps with JSON sidecars, RLE masks, CSV and JSON reports.

Every CSV and JSON report embeds the resolved configuration and a SHA-256
of its own data section, and is written with fixed formatting so that
identical inputs give byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np


def content_hash(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


# ----------------------------------------------------------------- fields

def write_field(path, array: np.ndarray, meta: dict | None = None) -> None:
    """Row-major little-endian dump plus ``<path>.json`` describing it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array)
    dtype = "<c16" if np.iscomplexobj(arr) else ("<f8" if arr.dtype.kind == "f" else "|u1")
    raw = arr.astype(dtype).tobytes(order="C")
    path.write_bytes(raw)
    side = {"shape": list(arr.shape), "dtype": dtype, "order": "C", "sha256": content_hash(raw),
            "meta": meta or {}}
    Path(str(path) + ".json").write_text(dumps(side))


def read_field(path) -> tuple:
    path = Path(path)
    side = json.loads(Path(str(path) + ".json").read_text())
    raw = path.read_bytes()
    if content_hash(raw) != side["sha256"]:
        raise ValueError(f"{path}: content hash mismatch")
    arr = np.frombuffer(raw, dtype=side["dtype"]).reshape(side["shape"]).copy()
    return arr, side["meta"]


# ------------------------------------------------------------------ masks

def rle_encode(mask: np.ndarray) -> dict:
    """Run-length code of a boolean array in row-major order, starting with False."""
    flat = np.asarray(mask, dtype=bool).ravel()
    change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    return {"shape": list(np.shape(mask)), "runs": runs}


def rle_decode(code: dict) -> np.ndarray:
    out = np.zeros(int(np.prod(code["shape"])), dtype=bool)
    pos, val = 0, False
    for r in code["runs"]:
        out[pos:pos + r] = val
        pos += r
        val = not val
    return out.reshape(code["shape"])


# ---------------------------------------------------------------- reports

def fmt(x) -> str:
    """Fixed text form of a table cell."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else ("nan" if math.isnan(x) else repr(float(x)))
    return str(x)


def write_csv(path, header: list, rows: list, config: dict | None = None) -> str:
    """Comma-separated table preceded by '#' lines with config and data hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = ",".join(header) + "\n" + "".join(",".join(fmt(v) for v in r) + "\n" for r in rows)
    digest = content_hash(body)
    head = f"# sha256: {digest}\n"
    if config is not None:
        head += "# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n"
    path.write_text(head + body)
    return digest


def read_csv(path) -> tuple:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_json(path, obj: dict, config: dict | None = None) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = dumps(obj)
    digest = content_hash(data)
    doc = {"data": _jsonable(obj), "sha256": digest}
    if config is not None:
        doc["config"] = _jsonable(config)
    path.write_text(dumps(doc) + "\n")
    return digest
