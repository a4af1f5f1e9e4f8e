"""Feature-space distances."""

from __future__ import annotations

import numpy as np

__all__ = ["s_ac", "l1_distance", "l2_distance"]


def _as_feature(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def s_ac(f_t, f_r) -> float:
    """Angular dissimilarity between two feature vectors, in [0, 1].

    Defined as arccos of the cosine similarity (clamped to [-1, 1])
    divided by pi: 0 for positively parallel vectors, 0.5 for orthogonal
    ones, 1 for antipodal ones.  Inputs are flattened and accumulated at
    float64 regardless of their dtype.

    Computed as 2/pi * atan2(||u - v||, ||u + v||) on the unit-normalized
    inputs, which is the same function as the clamped arccos but keeps
    full precision near the parallel and antipodal limits, where arccos
    turns one ulp of cosine error into ~1e-8 of angle.
    """
    a = _as_feature(f_t, "f_t")
    b = _as_feature(f_r, "f_r")
    if a.shape != b.shape:
        raise ValueError(f"feature length mismatch: {a.size} vs {b.size}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm feature vector has no direction")
    u = a / na
    v = b / nb
    return float(2.0 / np.pi * np.arctan2(np.linalg.norm(u - v),
                                          np.linalg.norm(u + v)))


def l1_distance(f_t, f_r) -> float:
    a = _as_feature(f_t, "f_t")
    b = _as_feature(f_r, "f_r")
    if a.shape != b.shape:
        raise ValueError(f"feature length mismatch: {a.size} vs {b.size}")
    return float(np.linalg.norm(a - b, ord=1))


def l2_distance(f_t, f_r) -> float:
    a = _as_feature(f_t, "f_t")
    b = _as_feature(f_r, "f_r")
    if a.shape != b.shape:
        raise ValueError(f"feature length mismatch: {a.size} vs {b.size}")
    return float(np.linalg.norm(a - b))
