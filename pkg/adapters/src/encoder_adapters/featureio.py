"""Reader/writer for the binary array container the host exchanges.

Implemented from the documented wire format, deliberately without
importing the host package: little-endian ``VFMF`` magic, u32 version
(must be 1), u32 rank (1..32), rank u32 dims, then exactly
prod(dims) float32 values in C order.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["FeatureIOError", "read_array", "write_array"]

_MAGIC = b"VFMF"
_VERSION = 1
_MAX_RANK = 32
_HEADER = struct.Struct("<4sII")


class FeatureIOError(ValueError):
    """Malformed container or un-serializable array."""


def write_array(path, values) -> None:
    """Write a float32 array; scalars are promoted to shape (1,)."""
    arr = np.ascontiguousarray(np.atleast_1d(values), dtype=np.float32)
    if arr.size == 0:
        raise FeatureIOError("refusing to write an empty array")
    if arr.ndim > _MAX_RANK:
        raise FeatureIOError(f"rank {arr.ndim} exceeds the format cap "
                             f"{_MAX_RANK}")
    if not np.all(np.isfinite(arr)):
        raise FeatureIOError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes(order="C"))


def read_array(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FeatureIOError(f"file is {len(blob)} bytes, smaller than the "
                             f"{_HEADER.size}-byte header")
    magic, version, rank = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FeatureIOError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FeatureIOError(f"unsupported version {version}")
    if not 1 <= rank <= _MAX_RANK:
        raise FeatureIOError(f"rank {rank} outside 1..{_MAX_RANK}")
    dims_end = _HEADER.size + 4 * rank
    if len(blob) < dims_end:
        raise FeatureIOError("file truncated inside the dims table")
    dims = struct.unpack_from(f"<{rank}I", blob, _HEADER.size)
    if any(d == 0 for d in dims):
        raise FeatureIOError(f"zero dimension in shape {dims}")
    count = 1
    for d in dims:
        count *= d
    payload = blob[dims_end:]
    if len(payload) != 4 * count:
        raise FeatureIOError(f"payload is {len(payload)} bytes, shape {dims} "
                             f"requires {4 * count}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
