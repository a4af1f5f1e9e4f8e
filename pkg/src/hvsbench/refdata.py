"""Ground-truth psychophysical curves and the stand-in CSF fallback.

Curves ship as CSV files under hvsbench/data: metadata comment lines
(# key=value), then an `x,y` header, then the data rows.  Required keys
are test_id, x_axis, y_axis and source; matching curves add c_ref.
Interpolation is linear in log-log space and refuses to extrapolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

__all__ = [
    "CurveFormatError", "CurveDomainError", "GroundTruthCurve", "load_curve",
    "threshold_at", "StandInCSF", "data_dir", "default_curve_path",
    "load_default_curve", "load_default_matching_curves", "DEFAULT_CURVES",
]

X_AXES = ("cpd", "cd_per_m2", "degrees", "mask_contrast")
Y_AXES = ("sensitivity", "threshold_contrast", "matched_contrast")


class CurveFormatError(ValueError):
    """A ground-truth file violates the documented format."""


class CurveDomainError(ValueError):
    """A query point lies outside the measured domain."""


@dataclass(frozen=True, eq=False)
class GroundTruthCurve:
    test_id: str
    x_axis: str
    y_axis: str
    x: np.ndarray
    y: np.ndarray
    source: str
    extra: dict = field(default_factory=dict)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])


def _validated_curve(test_id, x_axis, y_axis, x, y, source, extra,
                     where: str) -> GroundTruthCurve:
    if x_axis not in X_AXES:
        raise CurveFormatError(f"{where}: unknown x_axis {x_axis!r}")
    if y_axis not in Y_AXES:
        raise CurveFormatError(f"{where}: unknown y_axis {y_axis!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        raise CurveFormatError(f"{where}: need at least 2 points")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise CurveFormatError(f"{where}: non-finite values")
    if np.any(np.diff(x) <= 0):
        raise CurveFormatError(f"{where}: x values must increase strictly")
    if np.any(x <= 0):
        raise CurveFormatError(f"{where}: x values must be positive")
    if np.any(y <= 0):
        raise CurveFormatError(f"{where}: y values must be positive")
    return GroundTruthCurve(test_id, x_axis, y_axis, x, y, source,
                            dict(extra))


def load_curve(path: Union[str, Path]) -> GroundTruthCurve:
    """Parse one ground-truth CSV; errors carry path and line number."""
    path = Path(path)
    meta: dict = {}
    xs: list = []
    ys: list = []
    header_seen = False
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise CurveFormatError(f"{path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise CurveFormatError(
                    f"{path}:{lineno}: metadata line without key=value")
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.replace(" ", "") != "x,y":
                raise CurveFormatError(
                    f"{path}:{lineno}: expected header 'x,y', got {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise CurveFormatError(
                f"{path}:{lineno}: expected two comma-separated values")
        try:
            xs.append(float(parts[0]))
            ys.append(float(parts[1]))
        except ValueError as exc:
            raise CurveFormatError(f"{path}:{lineno}: {exc}") from exc
    if not header_seen:
        raise CurveFormatError(f"{path}: missing 'x,y' header")
    for key in ("test_id", "x_axis", "y_axis", "source"):
        if key not in meta:
            raise CurveFormatError(f"{path}: missing metadata key {key!r}")
    extra = {k: v for k, v in meta.items()
             if k not in ("test_id", "x_axis", "y_axis", "source")}
    if "c_ref" in extra:
        try:
            extra["c_ref"] = float(extra["c_ref"])
        except ValueError as exc:
            raise CurveFormatError(f"{path}: bad c_ref value") from exc
    return _validated_curve(meta["test_id"], meta["x_axis"], meta["y_axis"],
                            xs, ys, meta["source"], extra, str(path))


def threshold_at(curve: GroundTruthCurve, x) -> np.ndarray:
    """Interpolate the curve at x, linear in log-log space.

    Queries outside [x_min, x_max] raise CurveDomainError; the endpoints
    themselves are valid queries.  Returns y in the curve's own units.
    """
    xq = np.asarray(x, dtype=np.float64)
    scalar = xq.ndim == 0
    xq = np.atleast_1d(xq)
    lo, hi = curve.domain
    bad = (xq < lo) | (xq > hi) | ~np.isfinite(xq)
    if np.any(bad):
        raise CurveDomainError(
            f"query x={xq[bad][0]:.6g} outside measured domain "
            f"[{lo:.6g}, {hi:.6g}] for {curve.test_id}")
    out = np.exp(np.interp(np.log(xq), np.log(curve.x), np.log(curve.y)))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class StandInCSF:
    """Parametric detection-sensitivity fallback for achromatic tests.

    S(rho, L, area) = s_max
        * exp(-log2(rho/rho_peak)^2 / (2 sigma_oct^2))
        * sqrt(L / (L + l_half))
        * sqrt(area / (area + a_half))

    A documented stand-in, not a fitted model: log-Gaussian in log
    frequency (peak between 2 and 4 cpd), saturating luminance and area
    terms.  Chromatic thresholds must come from measured curve files.
    """

    rho_peak: float = 3.0    # cpd
    sigma_oct: float = 1.1   # octaves
    s_max: float = 400.0
    l_half: float = 20.0     # cd/m^2
    a_half: float = 0.1      # deg^2

    def sensitivity(self, rho, luminance, area):
        rho = np.asarray(rho, dtype=np.float64)
        luminance = np.asarray(luminance, dtype=np.float64)
        area = np.asarray(area, dtype=np.float64)
        if np.any(rho <= 0) or np.any(luminance <= 0) or np.any(area <= 0):
            raise ValueError("rho, luminance and area must be positive")
        tune = np.exp(-np.log2(rho / self.rho_peak) ** 2
                      / (2.0 * self.sigma_oct ** 2))
        lum = np.sqrt(luminance / (luminance + self.l_half))
        sz = np.sqrt(area / (area + self.a_half))
        out = self.s_max * tune * lum * sz
        return float(out) if out.ndim == 0 else out

    def threshold(self, rho, luminance, area):
        return 1.0 / self.sensitivity(rho, luminance, area)


def gabor_area(radius_deg: float) -> float:
    """Nominal stimulus area for an envelope sigma, pi * R^2 in deg^2."""
    return math.pi * radius_deg * radius_deg


def data_dir() -> Path:
    return Path(resources.files("hvsbench") / "data")


DEFAULT_CURVES = {
    "spatial-freq-gabor-ach": "csf_spatial_freq_gabor_ach.csv",
    "spatial-freq-noise-ach": "csf_spatial_freq_noise_ach.csv",
    "spatial-freq-gabor-rg": "csf_spatial_freq_gabor_rg.csv",
    "spatial-freq-gabor-yv": "csf_spatial_freq_gabor_yv.csv",
    "luminance-gabor-ach": "csf_luminance_gabor_ach.csv",
    "area-gabor-ach": "csf_area_gabor_ach.csv",
    "masking-phase-coherent": "masking_phase_coherent.csv",
    "masking-phase-incoherent": "masking_phase_incoherent.csv",
}

MATCHING_CURVE_STEMS = (
    "matching_c0005", "matching_c0010", "matching_c0020", "matching_c0040",
    "matching_c0080", "matching_c0160", "matching_c0320", "matching_c0629",
)


def default_curve_path(test_id: str) -> Path:
    if test_id not in DEFAULT_CURVES:
        raise KeyError(f"no default curve for {test_id!r}")
    return data_dir() / DEFAULT_CURVES[test_id]


def load_default_curve(test_id: str) -> GroundTruthCurve:
    return load_curve(default_curve_path(test_id))


def load_default_matching_curves() -> list:
    """The shipped human matching curves, ordered by reference contrast."""
    curves = [load_curve(data_dir() / f"{stem}.csv")
              for stem in MATCHING_CURVE_STEMS]
    return sorted(curves, key=lambda c: c.extra["c_ref"])
