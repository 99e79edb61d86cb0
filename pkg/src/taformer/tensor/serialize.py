"""Tensor container files.

Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON header
(manifest of name/dtype/shape/offset/nbytes plus free-form ``meta``), then
the raw little-endian row-major buffers in manifest order. The header is
serialised with sorted keys and no whitespace so a load/save round trip
reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TAFCKPT\x01"
_DTYPES = {"f4": "<f4", "f8": "<f8", "i8": "<i8"}


class ContainerError(ValueError):
    pass


def _code(arr: np.ndarray) -> str:
    for code, spec in _DTYPES.items():
        if arr.dtype == np.dtype(spec):
            return code
    raise ContainerError(f"unsupported dtype {arr.dtype}")


def dumps(tensors: dict, meta: dict | None = None) -> bytes:
    manifest, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        code = _code(arr)
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
        manifest.append({"name": name, "dtype": code, "shape": list(arr.shape),
                         "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"manifest": manifest, "meta": meta or {}},
                        sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(blobs)


def loads(blob: bytes):
    if blob[:8] != MAGIC:
        raise ContainerError("not a tensor container (bad magic)")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16:16 + hlen].decode())
    base = 16 + hlen
    tensors = {}
    for entry in header["manifest"]:
        start = base + entry["offset"]
        raw = blob[start:start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise ContainerError(f"{entry['name']}: truncated buffer")
        arr = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]]).reshape(entry["shape"])
        tensors[entry["name"]] = arr.astype(arr.dtype.newbyteorder("="), copy=True)
    return tensors, header["meta"]


def save(path, tensors: dict, meta: dict | None = None) -> None:
    Path(path).write_bytes(dumps(tensors, meta))


def load(path):
    return loads(Path(path).read_bytes())
