"""Binary feature-file format for encoder interchange.

Layout, all integers little-endian:

    magic   4 bytes  b"VFMF"
    version u32      1
    rank    u32      number of dimensions
    dims    rank x u32
    payload prod(dims) x float32, row-major

The payload length must equal the dims product exactly; trailing bytes
or truncation are rejected.  Images travel to adapters in this format
with dims [H, W, 3]; features come back with whatever dims the encoder
produces and are flattened downstream.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

__all__ = ["MAGIC", "VERSION", "FeatureFileError", "write_feature_file",
           "read_feature_file"]

MAGIC = b"VFMF"
VERSION = 1
_MAX_RANK = 32
_HEADER = struct.Struct("<4sII")


class FeatureFileError(ValueError):
    """Malformed feature file: bad magic, version, dims, or payload size."""


def write_feature_file(path: Union[str, Path], array) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")  # scalars become (1,)
    if arr.ndim > _MAX_RANK:
        raise FeatureFileError(f"rank {arr.ndim} exceeds the cap {_MAX_RANK}")
    if not np.all(np.isfinite(arr)):
        raise FeatureFileError("payload contains non-finite values")
    dims = arr.shape
    if any(d <= 0 or d > 0xFFFFFFFF for d in dims):
        raise FeatureFileError(f"dims {dims} outside u32 range or empty")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *dims))
        fh.write(arr.tobytes(order="C"))


def read_feature_file(path: Union[str, Path]) -> np.ndarray:
    """Read a feature file back as a float32 array shaped by its dims."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FeatureFileError(f"{path}: truncated header "
                               f"({len(blob)} bytes)")
    magic, version, rank = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FeatureFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FeatureFileError(f"{path}: unsupported version {version}")
    if not (1 <= rank <= _MAX_RANK):
        raise FeatureFileError(f"{path}: implausible rank {rank}")
    dims_end = _HEADER.size + 4 * rank
    if len(blob) < dims_end:
        raise FeatureFileError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{rank}I", blob, _HEADER.size)
    if any(d == 0 for d in dims):
        raise FeatureFileError(f"{path}: zero-length dimension in {dims}")
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + 4 * count
    if len(blob) != expected:
        raise FeatureFileError(
            f"{path}: payload is {len(blob) - dims_end} bytes, dims "
            f"{tuple(dims)} require {4 * count}")
    payload = np.frombuffer(blob, dtype="<f4", count=count, offset=dims_end)
    return payload.reshape(dims).copy()
