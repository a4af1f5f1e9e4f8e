"""Command-line entry points.

Subcommands:

    stimuli <test>            dump a test's stimulus lattice + manifest
    run --config <file>       full encoder x test sweep with caching
    score --grid <file> --curve <file> [...]
                              re-score stored grids without encoders
    report --dir <runs>       rebuild the aggregate table from pair files

Exit codes: 0 success, 1 total failure, 2 configuration error.  All
JSON/CSV outputs are byte-deterministic for a fixed config and seed
base: keys are sorted, floats use shortest round-trip repr, and no
timestamps or absolute paths are written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import alignment, refdata, stimuli
from .alignment import (AlignmentSample, DegenerateDataError, MatchResult,
                        contour_grid, detection_alignment, masking_alignment,
                        match_curves, matching_rmse, score_samples)
from .colorimetry import DisplayModel, GamutError, display_encode
from .encoders import EncoderError, open_encoder
from .featurefile import write_feature_file
from .refdata import (CurveDomainError, CurveFormatError, GroundTruthCurve,
                      load_curve, threshold_at)
from .stimuli import (MaskedSpec, NoiseSpec, TEST_IDS, TESTS, build_test_suite,
                      masked_stimulus, resolve_test_id, spec_from_dict,
                      spec_to_dict, synthesize)

__all__ = ["main", "ConfigError"]


class ConfigError(ValueError):
    """The run configuration or command line is unusable."""


# --------------------------------------------------------------------------
# Deterministic serialization helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if math.isnan(f) else f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1,
                      allow_nan=False) + "\n"


def _digest_of(obj) -> str:
    text = json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name) or "unnamed"


def _display_dict(display: DisplayModel) -> dict:
    return {"peak_luminance": display.peak_luminance,
            "pixels_per_degree": display.pixels_per_degree,
            "width": display.width, "height": display.height}


def _curve_dict(curve: GroundTruthCurve) -> dict:
    return {"test_id": curve.test_id, "x_axis": curve.x_axis,
            "y_axis": curve.y_axis, "x": list(curve.x), "y": list(curve.y),
            "source": curve.source, "extra": dict(curve.extra)}


# --------------------------------------------------------------------------
# Result serialization


def _samples_to_json(samples) -> list:
    return [{"j": s.j, "i": s.i, "x": s.x, "contrast": s.contrast,
             "s_ac": s.s_ac, "per_seed": list(s.per_seed), "skip": s.skip}
            for s in samples]


def _samples_from_json(rows) -> list:
    return [AlignmentSample(r["j"], r["i"], r["x"], r["contrast"], r["s_ac"],
                            tuple(r["per_seed"]), r["skip"]) for r in rows]


def _alignment_to_json(res) -> dict:
    return {"test_id": res.test_id, "encoder_id": res.encoder_id,
            "kind": res.kind, "r_s": res.r_s, "unreliable": res.unreliable,
            "n_total": res.n_total, "n_skipped": res.n_skipped,
            "conditions": list(res.conditions),
            "thresholds": list(res.thresholds),
            "multipliers": list(res.multipliers),
            "curve_source": res.curve_source,
            "samples": _samples_to_json(res.samples)}


def _contour_to_json(grid) -> dict:
    return {"x_values": list(grid.x_values),
            "contrast_values": list(grid.contrast_values),
            "s_ac": [list(row) for row in grid.s_ac],
            "skips": [{"j": j, "i": i, "reason": r}
                      for (j, i, r) in grid.skips]}


def _match_to_json(results_by_cref: dict, rmse: float, defn,
                   curves) -> dict:
    curves_out = []
    for curve in curves:
        c_ref = float(curve.extra["c_ref"])
        rows = [{"rho_t": r.rho_t, "c_ref": r.c_ref, "c_match": r.c_match,
                 "status": r.status, "objective": r.objective,
                 "target": r.target} for r in results_by_cref[c_ref]]
        curves_out.append({"c_ref": c_ref, "source": curve.source,
                           "results": rows})
    return {"rmse": rmse, "rho_ref": defn.reference_rho,
            "luminance": defn.luminance, "curves": curves_out}


# --------------------------------------------------------------------------
# stimuli subcommand


def cmd_stimuli(test_name: str, out_dir: Path, display: DisplayModel,
                seed_base: int = 0, n_x: int = 20, n_y: int = 20) -> int:
    """Dump one test's lattice as float binaries, previews, and manifest.

    Float files hold the display-encoded image (dims [H, W, 3], float32)
    and are the authoritative data; PNGs are 8-bit previews only.
    Regenerating from the manifest's spec parameters reproduces the float
    files bit-identically.
    """
    test_id = resolve_test_id(test_name)
    suite = build_test_suite(test_id, display, n_x=n_x, n_y=n_y,
                             seed_base=seed_base)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = []
    skipped = []
    ref_files: dict = {}
    references = []

    def dump(stem: str, image: np.ndarray) -> dict:
        encoded = display_encode(image, display).astype(np.float32)
        float_path = out_dir / f"{stem}.vfmf"
        write_feature_file(float_path, encoded)
        png_path = out_dir / f"{stem}.png"
        _write_png(png_path, encoded)
        return {"file": float_path.name, "preview": png_path.name,
                "sha256": _sha256_file(float_path)}

    for point in suite.points:
        base = {"j": point.j, "i": point.i, "x": point.x,
                "contrast": point.contrast,
                "spec": spec_to_dict(point.test),
                "reference_spec": spec_to_dict(point.reference)}
        if point.skip is not None:
            skipped.append({**base, "reason": point.skip})
            continue
        per_point_ref = (isinstance(point.test, MaskedSpec)
                         and isinstance(point.test.mask, NoiseSpec))
        try:
            # noise realizations can exceed the analytic precheck and
            # only fail here; record them as skipped like the scorer does
            if isinstance(point.test, MaskedSpec):
                test_img, ref_img = masked_stimulus(point.test.mask,
                                                    point.test.test, display)
            else:
                test_img = synthesize(point.test, display)
                ref_img = None
        except GamutError as exc:
            skipped.append({**base, "reason": str(exc)})
            continue
        entry = {**base, **dump(f"test-j{point.j:02d}-i{point.i:02d}",
                                test_img)}
        if per_point_ref:
            ref_entry = dump(f"ref-j{point.j:02d}-i{point.i:02d}", ref_img)
            references.append({"j": point.j, "i": point.i,
                               "spec": spec_to_dict(point.reference),
                               **ref_entry})
            entry["reference_file"] = ref_entry["file"]
        else:
            if point.reference not in ref_files:
                k = len(ref_files)
                img = (ref_img if ref_img is not None
                       else synthesize(point.reference, display))
                ref_entry = dump(f"ref-{k:03d}", img)
                ref_files[point.reference] = ref_entry["file"]
                references.append({"spec": spec_to_dict(point.reference),
                                   **ref_entry})
            entry["reference_file"] = ref_files[point.reference]
        images.append(entry)

    manifest = {
        "test_id": test_id,
        "display": _display_dict(display),
        "seed_base": seed_base,
        "format": "float32 feature files with dims [H, W, 3], "
                  "display-encoded sRGB in [0, 1]",
        "previews": "8-bit PNG previews only; not authoritative",
        "images": images,
        "references": references,
        "skipped": skipped,
    }
    _write_text(out_dir / "manifest.json", _dumps(manifest))
    print(f"{test_id}: wrote {len(images)} test images, "
          f"{len(references)} references, {len(skipped)} skipped -> "
          f"{out_dir}")
    return 0


def _write_png(path: Path, encoded: np.ndarray) -> None:
    from PIL import Image
    quantized = np.clip(np.round(encoded * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


# --------------------------------------------------------------------------
# run subcommand


_DEFAULT_SAMPLING = {
    "n_conditions": 20,
    "n_multipliers": 10,
    "noise_seeds": 5,
    "contour": True,
    "contour_x": 20,
    "contour_y": 20,
}


def _load_config(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if not raw.get("encoders"):
        raise ConfigError("config needs at least one encoder")
    tests = raw.get("tests") or ["all"]
    if tests == ["all"] or tests == "all":
        tests = list(TEST_IDS)
    try:
        raw["tests"] = [resolve_test_id(t) for t in tests]
    except KeyError as exc:
        raise ConfigError(str(exc))
    for enc in raw["encoders"]:
        if not isinstance(enc, dict) or "id" not in enc:
            raise ConfigError(f"encoder entry needs an 'id': {enc!r}")
        if enc.get("kind", "builtin-raw") == "subprocess":
            if not enc.get("command"):
                raise ConfigError(
                    f"subprocess encoder {enc['id']!r} needs a command")
    seen = set()
    for enc in raw["encoders"]:
        if enc["id"] in seen:
            raise ConfigError(f"duplicate encoder id {enc['id']!r}")
        seen.add(enc["id"])
    display_cfg = raw.get("display") or {}
    try:
        raw["display_model"] = DisplayModel(**display_cfg)
    except TypeError as exc:
        raise ConfigError(f"bad display settings: {exc}")
    sampling = dict(_DEFAULT_SAMPLING)
    sampling.update(raw.get("sampling") or {})
    raw["sampling"] = sampling
    return raw


def _curves_for_test(test_id: str, config: dict):
    """Ground-truth curve(s) for a test: configured path or packaged data."""
    override = (config.get("curves") or {}).get(test_id)
    if TESTS[test_id].kind == "matching":
        if override is not None:
            paths = override if isinstance(override, list) else [override]
            curves = [load_curve(Path(p)) for p in paths]
            for c in curves:
                if "c_ref" not in c.extra:
                    raise ConfigError(
                        f"matching curve {c.source!r} lacks c_ref metadata")
            return sorted(curves, key=lambda c: float(c.extra["c_ref"]))
        return refdata.load_default_matching_curves()
    if override is not None:
        return load_curve(Path(override))
    return refdata.load_default_curve(test_id)


def _pair_digest(test_id: str, encoder_id: str, display: DisplayModel,
                 sampling: dict, seed_base: int, curves) -> str:
    if isinstance(curves, list):
        curve_part = [_curve_dict(c) for c in curves]
    else:
        curve_part = _curve_dict(curves)
    return _digest_of({
        "test_id": test_id, "encoder_id": encoder_id,
        "display": _display_dict(display), "sampling": sampling,
        "seed_base": seed_base, "curves": curve_part,
    })


def _run_pair(encoder, test_id: str, display: DisplayModel, curves,
              sampling: dict, seed_base: int, parallel: int) -> dict:
    defn = TESTS[test_id]
    if defn.kind == "matching":
        results = match_curves(encoder, curves, display,
                               rho_ref=defn.reference_rho,
                               luminance=defn.luminance)
        rmse = matching_rmse(results, curves)
        return {"match": _match_to_json(results, rmse, defn, curves)}
    if defn.kind == "detection":
        res = detection_alignment(
            encoder, test_id, display, curve=curves,
            n_conditions=sampling["n_conditions"],
            n_multipliers=sampling["n_multipliers"],
            noise_seeds=sampling["noise_seeds"], seed_base=seed_base,
            parallel=parallel)
    else:
        res = masking_alignment(
            encoder, test_id, display, curves,
            n_multipliers=sampling["n_multipliers"],
            noise_seeds=sampling["noise_seeds"], seed_base=seed_base,
            parallel=parallel)
    out = {"alignment": _alignment_to_json(res)}
    if sampling["contour"]:
        grid = contour_grid(encoder, test_id, display,
                            n_x=sampling["contour_x"],
                            n_y=sampling["contour_y"],
                            noise_seeds=sampling["noise_seeds"],
                            seed_base=seed_base, parallel=parallel)
        out["contour"] = _contour_to_json(grid)
    return out


def _pair_score(pair: dict):
    if "error" in pair:
        return None
    if "match" in pair:
        return pair["match"]["rmse"]
    return pair["alignment"]["r_s"]


def _grid_csv(pair: dict) -> Optional[str]:
    contour = pair.get("contour")
    if contour is None:
        return None
    lines = ["contrast\\x," + ",".join(repr(x) for x in contour["x_values"])]
    for c, row in zip(contour["contrast_values"], contour["s_ac"]):
        cells = ["" if v is None else repr(v) for v in row]
        lines.append(repr(c) + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def _match_csv(pair: dict) -> str:
    lines = ["c_ref,rho_t,c_match,status"]
    for curve in pair["match"]["curves"]:
        for row in curve["results"]:
            lines.append(f"{curve['c_ref']!r},{row['rho_t']!r},"
                         f"{row['c_match']!r},{row['status']}")
    return "\n".join(lines) + "\n"


def _aggregate_csv(out_dir: Path, encoder_ids: Sequence[str]) -> str:
    lines = ["encoder," + ",".join(TEST_IDS)]
    for enc_id in encoder_ids:
        cells = []
        for test_id in TEST_IDS:
            path = out_dir / _safe_name(enc_id) / f"{test_id}.json"
            if not path.exists():
                cells.append("")
                continue
            pair = json.loads(path.read_text(encoding="utf-8"))
            score = _pair_score(pair)
            cells.append("" if score is None else repr(score))
        lines.append(_safe_name(enc_id) + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def _write_manifest(out_dir: Path) -> None:
    files = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[path.relative_to(out_dir).as_posix()] = _sha256_file(path)
    _write_text(out_dir / "manifest.json", _dumps({"files": files}))


def cmd_run(config_path: Path, out_override: Optional[Path],
            parallel_override: Optional[int],
            seed_override: Optional[int]) -> int:
    config = _load_config(config_path)
    display = config["display_model"]
    out_dir = Path(out_override or config.get("out_dir") or "runs")
    parallel = int(parallel_override or config.get("parallel") or 1)
    seed_base = int(config.get("seed_base", 0)
                    if seed_override is None else seed_override)
    sampling = config["sampling"]
    n_ok = 0
    n_failed = 0
    encoder_ids = [e["id"] for e in config["encoders"]]

    for enc_cfg in config["encoders"]:
        enc_id = enc_cfg["id"]
        enc_dir = out_dir / _safe_name(enc_id)
        try:
            encoder = open_encoder(enc_cfg)
        except (EncoderError, ValueError, OSError) as exc:
            for test_id in config["tests"]:
                _write_text(enc_dir / f"{test_id}.json", _dumps(
                    {"test_id": test_id, "encoder_id": enc_id,
                     "error": f"encoder failed to start: {exc}"}))
                n_failed += 1
            print(f"[{enc_id}] failed to start: {exc}", file=sys.stderr)
            continue
        try:
            for test_id in config["tests"]:
                pair_path = enc_dir / f"{test_id}.json"
                curves = _curves_for_test(test_id, config)
                digest = _pair_digest(test_id, enc_id, display, sampling,
                                      seed_base, curves)
                if pair_path.exists():
                    cached = json.loads(pair_path.read_text(encoding="utf-8"))
                    if cached.get("digest") == digest and "error" not in cached:
                        print(f"[{enc_id}] {test_id}: cached "
                              f"(score {_pair_score(cached):.6g})")
                        n_ok += 1
                        continue
                try:
                    body = _run_pair(encoder, test_id, display, curves,
                                     sampling, seed_base, parallel)
                    pair = {"test_id": test_id, "encoder_id": enc_id,
                            "digest": digest, **body}
                    n_ok += 1
                except Exception as exc:
                    pair = {"test_id": test_id, "encoder_id": enc_id,
                            "digest": digest,
                            "error": f"{type(exc).__name__}: {exc}"}
                    n_failed += 1
                    print(f"[{enc_id}] {test_id}: FAILED ({exc})",
                          file=sys.stderr)
                _write_text(pair_path, _dumps(pair))
                if "error" not in pair:
                    score = _pair_score(pair)
                    kind = "rmse" if "match" in pair else "r_s"
                    print(f"[{enc_id}] {test_id}: {kind} = {score:.6g}")
                    grid_csv = _grid_csv(pair)
                    if grid_csv is not None:
                        _write_text(enc_dir / f"{test_id}.grid.csv", grid_csv)
                    if "match" in pair:
                        _write_text(enc_dir / f"{test_id}.match.csv",
                                    _match_csv(pair))
        finally:
            close = getattr(encoder, "close", None)
            if close is not None:
                close()

    _write_text(out_dir / "aggregate.csv",
                _aggregate_csv(out_dir, encoder_ids))
    _write_manifest(out_dir)
    print(f"aggregate table -> {out_dir / 'aggregate.csv'}")
    if n_ok == 0:
        print("every encoder x test pair failed", file=sys.stderr)
        return 1
    return 0


# --------------------------------------------------------------------------
# score subcommand


def _interp_contour(contour: dict, x: float, c: float):
    """Bilinear interpolation of the stored S_ac lattice in log-log space.

    Returns (value, skip_reason); value is None when a participating cell
    was itself skipped.  Raises CurveDomainError outside the sampled
    ranges, naming them.
    """
    xs = np.asarray(contour["x_values"], dtype=np.float64)
    cs = np.asarray(contour["contrast_values"], dtype=np.float64)
    matrix = np.asarray([[np.nan if v is None else v for v in row]
                         for row in contour["s_ac"]], dtype=np.float64)
    if not (xs[0] <= x <= xs[-1]):
        raise CurveDomainError(
            f"condition {x:.6g} lies outside the sampled condition range "
            f"[{xs[0]:.6g}, {xs[-1]:.6g}]")
    if not (cs[0] <= c <= cs[-1]):
        raise CurveDomainError(
            f"required contrast {c:.6g} lies outside the sampled contrast "
            f"range [{cs[0]:.6g}, {cs[-1]:.6g}]")

    def bracket(grid: np.ndarray, v: float):
        hi = int(np.searchsorted(grid, v, side="left"))
        hi = min(max(hi, 1), grid.size - 1)
        lo = hi - 1
        t = ((math.log(v) - math.log(grid[lo]))
             / (math.log(grid[hi]) - math.log(grid[lo])))
        return lo, hi, t

    j0, j1, tx = bracket(xs, x)
    i0, i1, tc = bracket(cs, c)
    corners = matrix[[i0, i0, i1, i1], [j0, j1, j0, j1]]
    if np.any(np.isnan(corners)):
        return None, "interpolation touches a skipped grid cell"
    top = corners[0] * (1 - tx) + corners[1] * tx
    bot = corners[2] * (1 - tx) + corners[3] * tx
    return float(top * (1 - tc) + bot * tc), None


def _rescore_alignment(pair: dict, curve: GroundTruthCurve) -> dict:
    """Re-score a stored detection/masking grid against a curve.

    If the curve reproduces the stored thresholds exactly the stored
    samples are re-ranked directly (bit-exact).  Otherwise the dense
    contour lattice is interpolated at the new threshold ladder.
    """
    block = pair["alignment"]
    defn = TESTS[block["test_id"]]
    conditions = np.asarray(block["conditions"], dtype=np.float64)
    ms = np.asarray(block["multipliers"], dtype=np.float64)
    if curve.y_axis == "matched_contrast":
        raise CurveDomainError("matching curves cannot score a "
                               "detection/masking grid")
    if defn.kind == "masking":
        new_conditions = np.asarray(curve.x, dtype=np.float64)
        thresholds = np.asarray(curve.y, dtype=np.float64)
        if curve.y_axis != "threshold_contrast":
            raise CurveDomainError("masking needs threshold_contrast curves")
    else:
        new_conditions = conditions
        lo, hi = curve.domain
        if lo > conditions.min() or hi < conditions.max():
            raise CurveDomainError(
                f"curve covers [{lo:.6g}, {hi:.6g}] but the grid sampled "
                f"[{conditions.min():.6g}, {conditions.max():.6g}]")
        thresholds = threshold_at(curve, conditions)
        if curve.y_axis == "sensitivity":
            thresholds = 1.0 / thresholds

    stored = np.asarray(block["thresholds"], dtype=np.float64)
    same_axis = np.array_equal(new_conditions, conditions)
    if same_axis and stored.shape == thresholds.shape \
            and np.array_equal(stored, thresholds):
        samples = _samples_from_json(block["samples"])
        mode = "exact"
    else:
        contour = pair.get("contour")
        if contour is None:
            raise CurveDomainError(
                "stored grid has no contour lattice; cannot re-score "
                "against a different curve")
        samples = []
        for j, x in enumerate(new_conditions):
            for i, m in enumerate(ms):
                value, skip = _interp_contour(contour, float(x),
                                              float(m * thresholds[j]))
                samples.append(AlignmentSample(
                    j, i, float(x), float(m * thresholds[j]), value, (),
                    skip))
        mode = "interpolated"
    r, unreliable, n_skipped = score_samples(samples, ms)
    return {"test_id": block["test_id"], "encoder_id": block["encoder_id"],
            "kind": block["kind"], "r_s": r, "unreliable": unreliable,
            "n_total": len(samples), "n_skipped": n_skipped,
            "curve_source": curve.source, "mode": mode}


def _rescore_matching(pair: dict, curves) -> dict:
    block = pair["match"]
    model = {}
    for stored in block["curves"]:
        model[float(stored["c_ref"])] = [
            MatchResult(r["rho_t"], r["c_ref"], r["c_match"], r["status"],
                        r["objective"], r["target"])
            for r in stored["results"]]
    rmse = matching_rmse(model, curves)
    return {"test_id": pair["test_id"], "encoder_id": pair["encoder_id"],
            "kind": "matching", "rmse": rmse,
            "curve_source": ";".join(c.source for c in curves)}


def cmd_score(grid_path: Path, curve_paths: Sequence[Path],
              out_path: Optional[Path]) -> int:
    pair = json.loads(grid_path.read_text(encoding="utf-8"))
    if "error" in pair:
        raise ConfigError(f"grid file records a failed pair: "
                          f"{pair['error']}")
    if "match" in pair:
        curves = sorted((load_curve(p) for p in curve_paths),
                        key=lambda c: float(c.extra.get("c_ref", 0.0)))
        for c in curves:
            if "c_ref" not in c.extra:
                raise ConfigError(f"{c.source!r} lacks c_ref metadata")
        result = _rescore_matching(pair, curves)
    elif "alignment" in pair:
        if len(curve_paths) != 1:
            raise ConfigError("detection/masking grids take exactly one "
                              "curve file")
        result = _rescore_alignment(pair, load_curve(curve_paths[0]))
    else:
        raise ConfigError(f"{grid_path} is not a pair report")
    text = _dumps(result)
    if out_path is not None:
        _write_text(out_path, text)
    sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# report subcommand


def cmd_report(runs_dir: Path) -> int:
    if not runs_dir.is_dir():
        raise ConfigError(f"not a directory: {runs_dir}")
    encoder_ids = sorted(
        p.name for p in runs_dir.iterdir()
        if p.is_dir() and any(p.glob("*.json")))
    if not encoder_ids:
        raise ConfigError(f"no pair reports under {runs_dir}")
    csv_text = _aggregate_csv(runs_dir, encoder_ids)
    _write_text(runs_dir / "aggregate.csv", csv_text)
    _write_manifest(runs_dir)
    sys.stdout.write(csv_text)
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvsbench",
        description="Psychophysical alignment tests for image encoders")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stim = sub.add_parser("stimuli", help="dump a test's stimulus lattice")
    p_stim.add_argument("test", help="test id or alias")
    p_stim.add_argument("--out", type=Path, default=None)
    p_stim.add_argument("--seed", type=int, default=0)

    p_run = sub.add_parser("run", help="run encoders over tests and score")
    p_run.add_argument("--config", type=Path, required=True)
    p_run.add_argument("--out", type=Path, default=None)
    p_run.add_argument("--parallel", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_score = sub.add_parser("score",
                             help="re-score a stored grid against curves")
    p_score.add_argument("--grid", type=Path, required=True)
    p_score.add_argument("--curve", type=Path, action="append",
                         required=True)
    p_score.add_argument("--out", type=Path, default=None)

    p_rep = sub.add_parser("report", help="rebuild the aggregate table")
    p_rep.add_argument("--dir", type=Path, required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "stimuli":
            out = args.out or Path(f"stimuli-{resolve_test_id(args.test)}")
            return cmd_stimuli(args.test, out, DisplayModel(),
                               seed_base=args.seed)
        if args.command == "run":
            return cmd_run(args.config, args.out, args.parallel, args.seed)
        if args.command == "score":
            return cmd_score(args.grid, args.curve, args.out)
        if args.command == "report":
            return cmd_report(args.dir)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, CurveFormatError, CurveDomainError, KeyError,
            FileNotFoundError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except (EncoderError, DegenerateDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
