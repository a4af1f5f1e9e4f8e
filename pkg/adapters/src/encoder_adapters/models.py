"""Encoder registry: variant names resolved to loadable models.

Each variant maps to exactly one checkpoint (or to a stateless
definition for the test encoders) and carries its published
normalization and its feature extraction point.  Loading returns an
object with ``encode(image) -> 1-D float32 features`` plus a
provenance dict that records everything that shaped the output:
variant, weight source, extraction point, token policy, applied
normalization constants, and device.

Real checkpoints must already be present locally (torch.hub cache or
open_clip cache); nothing is downloaded at serve time, a missing
checkpoint is a load failure.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .preprocess import NORMALIZATIONS, normalize

__all__ = ["AdapterSpec", "ModelLoadError", "REGISTRY", "build_model",
           "variants", "weights_available"]


class ModelLoadError(RuntimeError):
    """The variant's model or checkpoint could not be loaded."""


@dataclass(frozen=True)
class AdapterSpec:
    """What a variant is and how its inputs/outputs are handled."""

    variant: str
    family: str
    weight_source: str
    extraction_point: str
    normalization: str
    input_size: Tuple[int, int] = (224, 224)
    device: str = "cpu"


_SPECS = [
    AdapterSpec(
        variant="identity",
        family="identity",
        weight_source="none (stateless pass-through)",
        extraction_point="input image, flattened",
        normalization="none"),
    AdapterSpec(
        variant="tiny-cnn",
        family="tiny-cnn",
        weight_source="deterministic random init, torch seed 0",
        extraction_point="final conv activation map, flattened",
        normalization="imagenet"),
]
for _v in ("dinov2-vits14", "dinov2-vitb14", "dinov2-vitl14"):
    _SPECS.append(AdapterSpec(
        variant=_v,
        family="dinov2",
        weight_source=f"torch.hub facebookresearch/dinov2 "
                      f"{_v.replace('-', '_')}",
        extraction_point="final encoder output, class + patch tokens",
        normalization="imagenet"))
for _v, _arch, _tag in (
        ("openclip-vitb32-laion2b", "ViT-B-32", "laion2b_s34b_b79k"),
        ("openclip-vitl14-laion2b", "ViT-L-14", "laion2b_s32b_b82k")):
    _SPECS.append(AdapterSpec(
        variant=_v,
        family="openclip",
        weight_source=f"open_clip {_arch} pretrained={_tag}",
        extraction_point="visual encoder output (image embedding)",
        normalization="openclip"))

REGISTRY = {spec.variant: spec for spec in _SPECS}


def variants():
    return sorted(REGISTRY)


def _spec_for(variant: str) -> AdapterSpec:
    try:
        return REGISTRY[variant]
    except KeyError:
        raise ModelLoadError(f"unknown variant {variant!r}; known: "
                             f"{', '.join(variants())}") from None


def weights_available(variant: str) -> bool:
    """Cheap local-cache probe; never touches the network."""
    spec = _spec_for(variant)
    if spec.family in ("identity", "tiny-cnn"):
        return True
    if spec.family == "dinov2":
        hub = os.environ.get("TORCH_HOME",
                             os.path.expanduser("~/.cache/torch"))
        stem = spec.variant.replace("-", "_")
        return bool(glob.glob(os.path.join(hub, "hub", "checkpoints",
                                           f"{stem}*.pth")))
    if spec.family == "openclip":
        try:
            import open_clip  # noqa: F401
        except ImportError:
            return False
        cache = os.path.expanduser("~/.cache/huggingface")
        return bool(glob.glob(os.path.join(cache, "**", "*laion2b*"),
                              recursive=True))
    return False


class _Model:
    """Common encode path: validate, normalize, run, flatten, check."""

    def __init__(self, spec: AdapterSpec, normalization: str,
                 tokens: str, device: str):
        self.spec = spec
        self.normalization = normalization
        self.tokens = tokens
        self.device = device

    def provenance(self) -> dict:
        mean, std = NORMALIZATIONS[self.normalization]
        return {
            "variant": self.spec.variant,
            "family": self.spec.family,
            "weight_source": self.spec.weight_source,
            "extraction_point": self.spec.extraction_point,
            "tokens": self.tokens,
            "normalization": {"policy": self.normalization,
                              "mean": list(mean), "std": list(std)},
            "input_size": list(self.spec.input_size),
            "device": self.device,
        }

    def encode(self, image: np.ndarray) -> np.ndarray:
        img = np.asarray(image, dtype=np.float32)
        h, w = self.spec.input_size
        if img.shape != (h, w, 3):
            raise ValueError(f"input dims {img.shape} do not match the "
                             f"expected ({h}, {w}, 3)")
        if not np.all(np.isfinite(img)):
            raise ValueError("input image contains non-finite values")
        feats = np.asarray(self._forward(normalize(img, self.normalization)),
                           dtype=np.float32).ravel()
        # contract: an adapter never hands back NaN/Inf
        if not np.all(np.isfinite(feats)):
            raise ValueError("model produced non-finite features")
        return feats

    def _forward(self, img: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _Identity(_Model):
    def _forward(self, img: np.ndarray) -> np.ndarray:
        return img.ravel()


class _TorchModel(_Model):
    """Wraps an eval-mode torch module; forward runs without grad."""

    def __init__(self, spec, normalization, tokens, device, module):
        super().__init__(spec, normalization, tokens, device)
        self._module = module

    def _to_tensor(self, img: np.ndarray):
        import torch
        chw = np.ascontiguousarray(img.transpose(2, 0, 1))
        return torch.from_numpy(chw).unsqueeze(0).to(self.device)

    def _forward(self, img: np.ndarray) -> np.ndarray:
        import torch
        with torch.no_grad():
            out = self._run(self._to_tensor(img))
        return out.detach().cpu().numpy()

    def _run(self, x):
        return self._module(x)


class _DinoV2Model(_TorchModel):
    def _run(self, x):
        import torch
        out = self._module.forward_features(x)
        cls = out["x_norm_clstoken"]
        if self.tokens == "cls":
            return cls
        return torch.cat([cls.unsqueeze(1), out["x_norm_patchtokens"]],
                         dim=1)


def _build_tiny_cnn():
    import torch
    from torch import nn

    torch.set_num_threads(1)
    net = nn.Sequential(
        nn.Conv2d(3, 16, 7, stride=4, padding=3), nn.GELU(),
        nn.Conv2d(16, 32, 5, stride=4, padding=2), nn.GELU(),
        nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.GELU(),
        nn.Flatten(),
    )
    gen = torch.Generator().manual_seed(0)
    for p in net.parameters():
        if p.ndim > 1:
            p.data.normal_(0.0, 0.05, generator=gen)
        else:
            p.data.zero_()
    net.eval()
    return net


def _load_dinov2(spec: AdapterSpec, device: str):
    import torch
    name = spec.variant.replace("-", "_")
    try:
        # hub cache only; a checkpoint that is not already local fails
        return torch.hub.load("facebookresearch/dinov2", name,
                              trust_repo=True).to(device).eval()
    except Exception as exc:
        raise ModelLoadError(
            f"{spec.variant}: checkpoint not loadable locally "
            f"({exc})") from exc


def _load_openclip(spec: AdapterSpec, device: str):
    arch_tag = spec.weight_source.split()[1:]
    arch, tag = arch_tag[0], arch_tag[1].split("=", 1)[1]
    try:
        import open_clip
        model = open_clip.create_model(arch, pretrained=tag,
                                       cache_dir=None)
    except Exception as exc:
        raise ModelLoadError(
            f"{spec.variant}: checkpoint not loadable locally "
            f"({exc})") from exc
    return model.visual.to(device).eval()


def build_model(variant: str, device: Optional[str] = None,
                apply_normalization: bool = True, tokens: str = "full"):
    """Load a registry variant; returns (model, provenance dict).

    ``apply_normalization=False`` swaps the variant's published policy
    for "none"; the provenance records whichever was applied, so the
    flag changes the output digest and is never silent.
    """
    spec = _spec_for(variant)
    if tokens not in ("full", "cls"):
        raise ValueError(f"tokens must be 'full' or 'cls', got {tokens!r}")
    dev = device or spec.device
    normalization = spec.normalization if apply_normalization else "none"

    if spec.family == "identity":
        model = _Identity(spec, normalization, tokens, dev)
    elif spec.family == "tiny-cnn":
        try:
            module = _build_tiny_cnn()
        except ImportError as exc:
            raise ModelLoadError(f"{variant}: torch is not installed "
                                 f"({exc})") from exc
        model = _TorchModel(spec, normalization, tokens, dev, module)
    elif spec.family == "dinov2":
        model = _DinoV2Model(spec, normalization, tokens, dev,
                             _load_dinov2(spec, dev))
    elif spec.family == "openclip":
        model = _TorchModel(spec, normalization, tokens, dev,
                            _load_openclip(spec, dev))
    else:  # pragma: no cover - registry is closed
        raise ModelLoadError(f"unhandled family {spec.family!r}")
    return model, model.provenance()
