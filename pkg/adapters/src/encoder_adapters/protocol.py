"""The serve loop: newline-delimited JSON on stdin/stdout.

On start the model is loaded; failure produces one
``{"ready": false, "error": ...}`` line and a nonzero exit so the host
can surface the reason.  Success produces
``{"ready": true, "name": <variant>, "provenance": {...}}`` and the
loop then answers one request at a time:

    {"id": N, "image": "<path>"}  ->  {"id": N, "feature": "<path>"}
                                  or  {"id": N, "error": "<message>"}

Any per-request problem (unreadable image, wrong dims, model error,
non-finite output) becomes an error response; the process stays alive
and in sync.  Feature files are written next to the image file, which
lives in a host-owned temp directory the host also cleans up.
"""

from __future__ import annotations

import json
import sys

from .featureio import FeatureIOError, read_array, write_array
from .models import ModelLoadError, build_model

__all__ = ["serve"]


def _emit(stream, payload: dict) -> None:
    stream.write(json.dumps(payload) + "\n")
    stream.flush()


def _handle(model, req: dict) -> dict:
    rid = req.get("id")
    try:
        image_path = req.get("image")
        if not isinstance(image_path, str):
            raise ValueError(f"request {rid!r} has no 'image' path")
        image = read_array(image_path)
        if image.ndim != 3 or image.shape[-1] != 3:
            raise ValueError(f"input dims {image.shape} are not an "
                             "H x W x 3 image")
        feats = model.encode(image)
        out_path = image_path + ".feat.vfmf"
        write_array(out_path, feats)
        return {"id": rid, "feature": out_path}
    except (OSError, ValueError, FeatureIOError, RuntimeError) as exc:
        return {"id": rid, "error": f"{type(exc).__name__}: {exc}"}


def serve(variant: str, device=None, apply_normalization: bool = True,
          tokens: str = "full", stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    try:
        model, provenance = build_model(
            variant, device=device,
            apply_normalization=apply_normalization, tokens=tokens)
    except (ModelLoadError, ValueError) as exc:
        _emit(stdout, {"ready": False, "error": str(exc)})
        print(f"load failed: {exc}", file=sys.stderr)
        return 1
    _emit(stdout, {"ready": True, "name": variant,
                   "provenance": provenance})
    print(f"serving {variant}: {json.dumps(provenance)}", file=sys.stderr)

    for line in stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            # the host never sends garbage; log and keep the stream
            print(f"ignoring non-JSON request line: {exc}",
                  file=sys.stderr)
            continue
        _emit(stdout, _handle(model, req))
    return 0
