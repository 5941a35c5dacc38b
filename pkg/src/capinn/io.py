"""Binary container: JSON header followed by little-endian float64 arrays.

Layout::

    b"CAPINN01" | uint64 LE header length | header (UTF-8 JSON) | payload

The header has ``meta`` (free-form JSON) and ``entries``, a list of
``{"name", "shape", "offset"}`` with offsets counted in float64 elements.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CAPINN01"


def save_container(path, arrays: dict, meta: dict | None = None) -> None:
    entries = []
    offset = 0
    for name, arr in arrays.items():
        a = np.asarray(arr, dtype=np.float64)
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.size
    header = json.dumps({"meta": meta or {}, "entries": entries}, sort_keys=True).encode()
    payload = np.concatenate([np.asarray(a, "<f8").ravel() for a in arrays.values()]) if arrays else np.zeros(0, "<f8")
    with open(Path(path), "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(payload.astype("<f8").tobytes())


def load_container(path):
    """Return ``(arrays, meta)``; arrays keep their saved order."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a capinn container")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16 : 16 + hlen].decode())
    payload = np.frombuffer(raw[16 + hlen :], dtype="<f8")
    arrays = {}
    for e in header["entries"]:
        n = int(np.prod(e["shape"], dtype=np.int64))
        arrays[e["name"]] = payload[e["offset"] : e["offset"] + n].astype(np.float64).reshape(e["shape"])
    return arrays, header["meta"]
