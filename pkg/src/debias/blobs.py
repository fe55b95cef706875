"""Minimal deterministic container: a JSON header followed by raw little-endian arrays."""

from __future__ import annotations

import json
import struct

import numpy as np

_LEN = struct.Struct("<Q")


def pack(meta: dict, arrays: dict[str, np.ndarray] | None = None) -> bytes:
    arrays = arrays or {}
    parts, layout = [], []
    for name in sorted(arrays):
        a = np.asarray(arrays[name])
        dt = a.dtype.newbyteorder("<") if a.dtype.byteorder not in ("|", "<") else a.dtype
        raw = np.ascontiguousarray(a, dtype=dt).tobytes()
        layout.append({"name": name, "dtype": dt.str, "shape": list(a.shape), "nbytes": len(raw)})
        parts.append(raw)
    head = json.dumps({"meta": meta, "arrays": layout}, sort_keys=True, separators=(",", ":")).encode()
    return _LEN.pack(len(head)) + head + b"".join(parts)


def unpack(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    (n,) = _LEN.unpack_from(blob)
    head = json.loads(blob[_LEN.size : _LEN.size + n])
    off = _LEN.size + n
    arrays = {}
    for spec in head["arrays"]:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        a = np.frombuffer(blob, dtype=np.dtype(spec["dtype"]), count=count, offset=off)
        arrays[spec["name"]] = a.reshape(spec["shape"]).copy()
        off += spec["nbytes"]
    return head["meta"], arrays
