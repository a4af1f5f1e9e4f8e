"""Channel normalization policies.

Inputs arrive display-encoded sRGB in [0, 1] at the size the model
expects, so preprocessing is exactly the published per-channel
(x - mean) / std of each model family and nothing else: no resizing,
no cropping, and no 8-bit quantization anywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NORMALIZATIONS", "normalize"]

# published constants: torchvision ImageNet defaults (used by DINO,
# DINOv2, MAE, SAM) and the OpenAI CLIP statistics OpenCLIP reuses
NORMALIZATIONS = {
    "imagenet": ((0.485, 0.456, 0.406), (0.229, 0.224, 0.225)),
    "openclip": ((0.48145466, 0.4578275, 0.40821073),
                 (0.26862954, 0.26130258, 0.27577711)),
    "none": ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
}


def normalize(image: np.ndarray, policy: str) -> np.ndarray:
    """Apply a named per-channel normalization to an H x W x 3 image."""
    if policy not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization policy {policy!r}, "
                         f"expected one of {sorted(NORMALIZATIONS)}")
    mean, std = NORMALIZATIONS[policy]
    img = np.asarray(image, dtype=np.float32)
    mean32 = np.asarray(mean, dtype=np.float32)
    std32 = np.asarray(std, dtype=np.float32)
    return (img - mean32) / std32
