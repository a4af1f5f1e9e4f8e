"""Psychophysical stimulus synthesis on the calibrated display model.

All generators return luminance images, (H, W, 3) float64 cd/m^2 (see
colorimetry).  Patterns are sampled on integer pixel coordinates
x = arange(W) - W//2, y = arange(H) - H//2, so the lattice contains a true
zero at the center column and row; with sine phase the center pixel is
exactly the background.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .colorimetry import (DisplayModel, GamutError, chromatic_to_rgb_luminance,
                          gamut_limit)

__all__ = [
    "GaborSpec", "GratingSpec", "NoiseSpec", "MaskedSpec", "UniformSpec",
    "uniform_field", "gabor", "grating", "band_limited_noise",
    "masked_stimulus", "synthesize", "reference_for", "stable_seed",
    "TEST_IDS", "TEST_ALIASES", "TestDef", "TESTS", "SuitePoint", "TestSuite",
    "build_test_suite", "noise_band_for", "skip_reason",
]


def stable_seed(*parts) -> int:
    """Platform-stable 64-bit seed derived from the given parts."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class UniformSpec:
    """Uniform achromatic field at a background luminance."""
    luminance: float


@dataclass(frozen=True)
class GaborSpec:
    """Gabor patch: sinusoid under a Gaussian envelope.

    rho is spatial frequency in cpd, luminance the background in cd/m^2,
    radius the envelope sigma in visual degrees, contrast the modulation
    amplitude (Michelson for 'ach', pooled cone contrast for 'rg'/'yv'),
    phase in radians with 0 = sine phase (zero crossing at the center).
    """
    rho: float
    luminance: float
    radius: float
    contrast: float
    phase: float = 0.0
    direction: str = "ach"


@dataclass(frozen=True)
class GratingSpec:
    """Full-field sinusoidal grating (a Gabor with unit envelope)."""
    rho: float
    luminance: float
    contrast: float
    phase: float = 0.0
    direction: str = "ach"


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited Gaussian noise. contrast is the target RMS contrast."""
    f_lo: float
    f_hi: float
    luminance: float
    contrast: float
    seed: int


@dataclass(frozen=True)
class MaskedSpec:
    """A Gabor test superimposed on a mask at the same background."""
    mask: Union[GratingSpec, NoiseSpec]
    test: GaborSpec


AnySpec = Union[UniformSpec, GaborSpec, GratingSpec, NoiseSpec, MaskedSpec]


def spec_to_dict(spec: AnySpec) -> dict:
    """JSON-safe parameter dict; spec_from_dict inverts it exactly."""
    if isinstance(spec, UniformSpec):
        return {"type": "uniform", "luminance": spec.luminance}
    if isinstance(spec, GaborSpec):
        return {"type": "gabor", "rho": spec.rho,
                "luminance": spec.luminance, "radius": spec.radius,
                "contrast": spec.contrast, "phase": spec.phase,
                "direction": spec.direction}
    if isinstance(spec, GratingSpec):
        return {"type": "grating", "rho": spec.rho,
                "luminance": spec.luminance, "contrast": spec.contrast,
                "phase": spec.phase, "direction": spec.direction}
    if isinstance(spec, NoiseSpec):
        return {"type": "noise", "f_lo": spec.f_lo, "f_hi": spec.f_hi,
                "luminance": spec.luminance, "contrast": spec.contrast,
                "seed": spec.seed}
    if isinstance(spec, MaskedSpec):
        return {"type": "masked", "mask": spec_to_dict(spec.mask),
                "test": spec_to_dict(spec.test)}
    raise TypeError(f"not a stimulus spec: {type(spec).__name__}")


def spec_from_dict(d: dict) -> AnySpec:
    kind = d.get("type")
    fields = {k: v for k, v in d.items() if k != "type"}
    if kind == "uniform":
        return UniformSpec(**fields)
    if kind == "gabor":
        return GaborSpec(**fields)
    if kind == "grating":
        return GratingSpec(**fields)
    if kind == "noise":
        return NoiseSpec(**fields)
    if kind == "masked":
        return MaskedSpec(mask=spec_from_dict(d["mask"]),
                          test=spec_from_dict(d["test"]))
    raise ValueError(f"unknown stimulus type {kind!r}")


def _pixel_grid(display: DisplayModel):
    x = np.arange(display.width, dtype=np.float64) - display.width // 2
    y = np.arange(display.height, dtype=np.float64) - display.height // 2
    return np.meshgrid(x, y)


def _check_common(rho: float, luminance: float, contrast: float) -> None:
    if rho < 0:
        raise ValueError("spatial frequency must be non-negative")
    if luminance <= 0:
        raise ValueError("background luminance must be positive")
    if contrast < 0:
        raise ValueError("contrast must be non-negative")


def _replicate(single: np.ndarray) -> np.ndarray:
    return np.repeat(single[:, :, None], 3, axis=2)


def uniform_field(luminance: float, display: DisplayModel) -> np.ndarray:
    if luminance <= 0:
        raise ValueError("background luminance must be positive")
    return np.full((display.height, display.width, 3), float(luminance))


def _gabor_pattern(spec: GaborSpec, display: DisplayModel) -> np.ndarray:
    xx, yy = _pixel_grid(display)
    ppd = display.pixels_per_degree
    carrier = np.sin(2.0 * np.pi * spec.rho * xx / ppd + spec.phase)
    sigma_px = ppd * spec.radius
    envelope = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma_px * sigma_px))
    return carrier * envelope


def _grating_pattern(spec: GratingSpec, display: DisplayModel) -> np.ndarray:
    xx, _ = _pixel_grid(display)
    ppd = display.pixels_per_degree
    return np.sin(2.0 * np.pi * spec.rho * xx / ppd + spec.phase)


def _modulate(pattern: np.ndarray, luminance: float, contrast: float,
              direction: str, display: DisplayModel) -> np.ndarray:
    if direction == "ach":
        if contrast > 1.0:
            raise GamutError(
                f"achromatic contrast {contrast:.6g} > 1 drives luminance "
                "negative")
        return _replicate(luminance * (1.0 + contrast * pattern))
    return chromatic_to_rgb_luminance(pattern, direction, luminance,
                                      contrast, display)


def gabor(spec: GaborSpec, display: DisplayModel) -> np.ndarray:
    """L_b * (1 + c * sin(2 pi rho x / ppd + phase) * gaussian(x, y))."""
    _check_common(spec.rho, spec.luminance, spec.contrast)
    if spec.radius <= 0:
        raise ValueError("envelope radius must be positive")
    return _modulate(_gabor_pattern(spec, display), spec.luminance,
                     spec.contrast, spec.direction, display)


def grating(spec: GratingSpec, display: DisplayModel) -> np.ndarray:
    _check_common(spec.rho, spec.luminance, spec.contrast)
    return _modulate(_grating_pattern(spec, display), spec.luminance,
                     spec.contrast, spec.direction, display)


def _noise_pattern(spec: NoiseSpec, display: DisplayModel) -> np.ndarray:
    """Unit-sample-std band-limited noise field.

    Gaussian white noise is filtered in the frequency domain: every FFT
    coefficient whose radial frequency (cpd) falls outside [f_lo, f_hi]
    is zeroed, the field is transformed back and rescaled to unit sample
    standard deviation.
    """
    nyq = display.nyquist
    if not (0.0 <= spec.f_lo < spec.f_hi <= nyq):
        raise ValueError(
            f"invalid noise band [{spec.f_lo:.6g}, {spec.f_hi:.6g}]: need "
            f"0 <= f_lo < f_hi <= Nyquist ({nyq:.6g} cpd)")
    h, w = display.height, display.width
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal((h, w))
    spectrum = np.fft.fft2(white)
    # cycles per degree along each axis; fftfreq already applies the
    # wrapped (mod 1/2) frequency convention
    fu = np.fft.fftfreq(w, d=1.0 / display.pixels_per_degree)
    fv = np.fft.fftfreq(h, d=1.0 / display.pixels_per_degree)
    radial = np.hypot(fu[None, :], fv[:, None])
    band = (radial >= spec.f_lo) & (radial <= spec.f_hi)
    if not band.any():
        raise ValueError(
            f"noise band [{spec.f_lo:.6g}, {spec.f_hi:.6g}] contains no FFT "
            "bin after discretization")
    if band.sum() == 1 and band[0, 0]:
        # only DC passes; normalizing the (numerically near-) constant
        # field would amplify FFT rounding noise
        raise ValueError(
            f"noise band [{spec.f_lo:.6g}, {spec.f_hi:.6g}] passes only "
            "the DC bin, producing a constant field")
    filtered = np.fft.ifft2(spectrum * band).real
    sigma = filtered.std()
    if sigma == 0.0:
        raise ValueError("noise band produced a constant field")
    return filtered / sigma


def band_limited_noise(spec: NoiseSpec, display: DisplayModel) -> np.ndarray:
    """L_b * (1 + c * N_bp / std(N_bp)); sample std of the output is c*L_b."""
    if spec.luminance <= 0:
        raise ValueError("background luminance must be positive")
    if spec.contrast < 0:
        raise ValueError("contrast must be non-negative")
    pattern = _noise_pattern(spec, display)
    single = spec.luminance * (1.0 + spec.contrast * pattern)
    if single.min() < 0:
        raise GamutError(
            f"noise at contrast {spec.contrast:.6g} drives luminance "
            f"negative (min {single.min():.6g} cd/m^2)")
    return _replicate(single)


def masked_stimulus(mask_spec: Union[GratingSpec, NoiseSpec],
                    test_spec: GaborSpec,
                    display: DisplayModel) -> tuple[np.ndarray, np.ndarray]:
    """Superimpose a Gabor test on a mask; returns (test, reference).

    The reference is the mask alone.  Both components share the background
    luminance and the modulations add before the luminance mapping, so at
    c_test = 0 the test equals the reference exactly.
    """
    if isinstance(mask_spec, GratingSpec):
        if mask_spec.direction != "ach":
            raise ValueError("masking stimuli are achromatic")
        _check_common(mask_spec.rho, mask_spec.luminance, mask_spec.contrast)
        mask_pattern = _grating_pattern(mask_spec, display)
    elif isinstance(mask_spec, NoiseSpec):
        mask_pattern = _noise_pattern(mask_spec, display)
    else:
        raise TypeError(f"unsupported mask spec {type(mask_spec).__name__}")
    if test_spec.direction != "ach":
        raise ValueError("masking stimuli are achromatic")
    if test_spec.luminance != mask_spec.luminance:
        raise ValueError("mask and test must share the background luminance")
    _check_common(test_spec.rho, test_spec.luminance, test_spec.contrast)
    lum = mask_spec.luminance
    ref_mod = mask_spec.contrast * mask_pattern
    test_mod = ref_mod + test_spec.contrast * _gabor_pattern(test_spec, display)
    test_single = lum * (1.0 + test_mod)
    ref_single = lum * (1.0 + ref_mod)
    for name, img in (("test", test_single), ("reference", ref_single)):
        if img.min() < 0:
            raise GamutError(
                f"masked {name} drives luminance negative "
                f"(min {img.min():.6g} cd/m^2)")
    return _replicate(test_single), _replicate(ref_single)


def synthesize(spec: AnySpec, display: DisplayModel) -> np.ndarray:
    """Generate the luminance image for any stimulus spec.

    For MaskedSpec this returns the test image; use masked_stimulus or
    reference_for when the mask-alone reference is needed too.
    """
    if isinstance(spec, UniformSpec):
        return uniform_field(spec.luminance, display)
    if isinstance(spec, GaborSpec):
        return gabor(spec, display)
    if isinstance(spec, GratingSpec):
        return grating(spec, display)
    if isinstance(spec, NoiseSpec):
        return band_limited_noise(spec, display)
    if isinstance(spec, MaskedSpec):
        return masked_stimulus(spec.mask, spec.test, display)[0]
    raise TypeError(f"unsupported stimulus spec {type(spec).__name__}")


def reference_for(spec: AnySpec, display: DisplayModel) -> np.ndarray:
    """Generate the reference image paired with a stimulus spec."""
    if isinstance(spec, MaskedSpec):
        return masked_stimulus(spec.mask, spec.test, display)[1]
    if isinstance(spec, (GaborSpec, GratingSpec)):
        return uniform_field(spec.luminance, display)
    if isinstance(spec, NoiseSpec):
        return uniform_field(spec.luminance, display)
    if isinstance(spec, UniformSpec):
        return uniform_field(spec.luminance, display)
    raise TypeError(f"unsupported stimulus spec {type(spec).__name__}")


# --------------------------------------------------------------------------
# The nine-test battery


@dataclass(frozen=True)
class TestDef:
    test_id: str
    kind: str                   # detection | masking | matching
    x_axis: str                 # cpd | cd_per_m2 | degrees | mask_contrast
    x_range: tuple
    contrast_range: tuple
    direction: str = "ach"
    stimulus: str = "gabor"     # gabor | noise
    rho: Optional[float] = None
    luminance: Optional[float] = None
    radius: Optional[float] = None
    mask_rho: Optional[float] = None          # grating masks
    mask_band: Optional[tuple] = None         # noise masks, cpd
    test_rho: Optional[float] = None
    test_radius: Optional[float] = None
    reference_rho: Optional[float] = None
    reference_contrasts: Optional[tuple] = None


# Reference contrasts for the matching test: doubling series from 0.005
# with the top level at the highest measured reference contrast.
MATCHING_REFERENCE_CONTRASTS = (0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32,
                                0.629)

TESTS = {
    "spatial-freq-gabor-ach": TestDef(
        test_id="spatial-freq-gabor-ach", kind="detection", x_axis="cpd",
        x_range=(0.5, 32.0), contrast_range=(0.001, 1.0),
        luminance=100.0, radius=1.0),
    "spatial-freq-noise-ach": TestDef(
        test_id="spatial-freq-noise-ach", kind="detection", x_axis="cpd",
        x_range=(0.5, 32.0), contrast_range=(0.001, 1.0),
        stimulus="noise", luminance=100.0),
    "spatial-freq-gabor-rg": TestDef(
        test_id="spatial-freq-gabor-rg", kind="detection", x_axis="cpd",
        x_range=(0.5, 32.0), contrast_range=(0.001, 0.12),
        direction="rg", luminance=100.0, radius=1.0),
    "spatial-freq-gabor-yv": TestDef(
        test_id="spatial-freq-gabor-yv", kind="detection", x_axis="cpd",
        x_range=(0.5, 32.0), contrast_range=(0.001, 0.8),
        direction="yv", luminance=100.0, radius=1.0),
    "luminance-gabor-ach": TestDef(
        test_id="luminance-gabor-ach", kind="detection", x_axis="cd_per_m2",
        x_range=(0.1, 200.0), contrast_range=(0.001, 1.0),
        rho=2.0, radius=1.0),
    "area-gabor-ach": TestDef(
        test_id="area-gabor-ach", kind="detection", x_axis="degrees",
        x_range=(0.1, 1.0), contrast_range=(0.001, 1.0),
        rho=8.0, luminance=100.0),
    "masking-phase-coherent": TestDef(
        test_id="masking-phase-coherent", kind="masking",
        x_axis="mask_contrast", x_range=(0.005, 0.5),
        contrast_range=(0.01, 0.5), luminance=32.0,
        mask_rho=2.0, test_rho=2.0, test_radius=0.5),
    "masking-phase-incoherent": TestDef(
        test_id="masking-phase-incoherent", kind="masking",
        x_axis="mask_contrast", x_range=(0.005, 0.5),
        contrast_range=(0.01, 0.5), luminance=37.0,
        mask_band=(0.0, 12.0), test_rho=1.2, test_radius=0.8),
    "contrast-matching": TestDef(
        test_id="contrast-matching", kind="matching", x_axis="cpd",
        x_range=(0.25, 25.0), contrast_range=(0.005, 0.629),
        luminance=10.0, reference_rho=5.0,
        reference_contrasts=MATCHING_REFERENCE_CONTRASTS),
}

TEST_IDS = tuple(TESTS)

TEST_ALIASES = {
    "gabor-ach": "spatial-freq-gabor-ach",
    "noise-ach": "spatial-freq-noise-ach",
    "gabor-rg": "spatial-freq-gabor-rg",
    "gabor-yv": "spatial-freq-gabor-yv",
    "luminance": "luminance-gabor-ach",
    "area": "area-gabor-ach",
    "masking-coherent": "masking-phase-coherent",
    "masking-incoherent": "masking-phase-incoherent",
    "matching": "contrast-matching",
}


def resolve_test_id(name: str) -> str:
    test_id = TEST_ALIASES.get(name, name)
    if test_id not in TESTS:
        known = ", ".join(TEST_IDS)
        raise KeyError(f"unknown test {name!r}; known tests: {known}")
    return test_id


def noise_band_for(rho: float, display: DisplayModel) -> tuple[float, float]:
    """One-octave band centered geometrically on rho, clipped to Nyquist.

    The table's frequency range tops out above Nyquist for the reference
    display, so the upper edge clips; the lower edge stays below Nyquist
    for every tabulated frequency.
    """
    lo = rho / np.sqrt(2.0)
    hi = min(rho * np.sqrt(2.0), display.nyquist)
    if lo >= hi:
        raise ValueError(
            f"noise band for rho={rho:.6g} cpd collapses after clipping to "
            f"Nyquist ({display.nyquist:.6g} cpd)")
    return float(lo), float(hi)


def detection_point(defn: TestDef, x: float, contrast: float, seed: int,
                    display: DisplayModel) -> tuple[AnySpec, UniformSpec]:
    """Test/reference spec pair for one detection-grid point."""
    if defn.kind != "detection":
        raise ValueError(f"{defn.test_id} is not a detection test")
    if defn.x_axis == "cpd":
        if defn.stimulus == "noise":
            lo, hi = noise_band_for(x, display)
            spec: AnySpec = NoiseSpec(lo, hi, defn.luminance, contrast, seed)
        else:
            spec = GaborSpec(x, defn.luminance, defn.radius, contrast,
                             direction=defn.direction)
        return spec, UniformSpec(defn.luminance)
    if defn.x_axis == "cd_per_m2":
        spec = GaborSpec(defn.rho, x, defn.radius, contrast,
                         direction=defn.direction)
        return spec, UniformSpec(x)
    if defn.x_axis == "degrees":
        spec = GaborSpec(defn.rho, defn.luminance, x, contrast,
                         direction=defn.direction)
        return spec, UniformSpec(defn.luminance)
    raise ValueError(f"unsupported detection axis {defn.x_axis!r}")


def masking_point(defn: TestDef, mask_contrast: float, test_contrast: float,
                  seed: int) -> MaskedSpec:
    """MaskedSpec for one masking-grid point; reference is spec.mask."""
    if defn.kind != "masking":
        raise ValueError(f"{defn.test_id} is not a masking test")
    if defn.mask_band is not None:
        mask: Union[GratingSpec, NoiseSpec] = NoiseSpec(
            defn.mask_band[0], defn.mask_band[1], defn.luminance,
            mask_contrast, seed)
    else:
        mask = GratingSpec(defn.mask_rho, defn.luminance, mask_contrast)
    test = GaborSpec(defn.test_rho, defn.luminance, defn.test_radius,
                     test_contrast)
    return MaskedSpec(mask, test)


def skip_reason(spec: AnySpec, display: DisplayModel) -> Optional[str]:
    """Why a lattice point cannot be displayed, or None if it can.

    Analytic precheck at nominal +-1 modulation; noise realizations can
    still fail at generation time and are caught there.
    """
    if isinstance(spec, GaborSpec) or isinstance(spec, GratingSpec):
        if spec.direction == "ach":
            if spec.contrast > 1.0:
                return (f"contrast {spec.contrast:.6g} > 1 drives luminance "
                        "negative")
            return None
        limit = gamut_limit(spec.direction, spec.luminance, display)
        if spec.contrast > limit:
            return (f"contrast {spec.contrast:.6g} exceeds the "
                    f"{spec.direction} gamut limit {limit:.6g} at "
                    f"L_b={spec.luminance:.6g}")
        return None
    if isinstance(spec, MaskedSpec):
        if isinstance(spec.mask, GratingSpec):
            total = spec.mask.contrast + spec.test.contrast
            if total > 1.0:
                return (f"combined modulation {total:.6g} > 1 drives "
                        "luminance negative")
        return None
    return None


@dataclass(frozen=True)
class SuitePoint:
    j: int                      # condition index (x axis)
    i: int                      # contrast index (y axis)
    x: float
    contrast: float
    test: AnySpec
    reference: AnySpec
    skip: Optional[str]


@dataclass(frozen=True)
class TestSuite:
    test_id: str
    x_values: np.ndarray
    contrast_values: np.ndarray
    points: tuple
    display: DisplayModel


def build_test_suite(test_id: str, display: DisplayModel, n_x: int = 20,
                     n_y: int = 20, seed_base: int = 0) -> TestSuite:
    """Full stimulus lattice for one test.

    Detection and masking tests get an n_x by n_y log-spaced lattice over
    the tabulated condition and contrast ranges, endpoints included.
    Matching emits nominal test/reference grating pairs at the reference
    contrasts (matched contrasts only exist once the solver has run).
    Points the display cannot reproduce are kept with a skip reason rather
    than silently generated.
    """
    defn = TESTS[resolve_test_id(test_id)]
    xs = np.geomspace(defn.x_range[0], defn.x_range[1], n_x)
    if defn.kind == "matching":
        contrasts = np.asarray(defn.reference_contrasts)
    else:
        contrasts = np.geomspace(defn.contrast_range[0],
                                 defn.contrast_range[1], n_y)
    points = []
    for j, x in enumerate(xs):
        for i, c in enumerate(contrasts):
            seed = stable_seed(seed_base, defn.test_id, j, i, 0)
            if defn.kind == "detection":
                test, ref = detection_point(defn, float(x), float(c), seed,
                                            display)
            elif defn.kind == "masking":
                test = masking_point(defn, float(x), float(c), seed)
                ref = test.mask
            else:
                test = GratingSpec(float(x), defn.luminance, float(c))
                ref = GratingSpec(defn.reference_rho, defn.luminance,
                                  float(c))
            points.append(SuitePoint(j, i, float(x), float(c), test, ref,
                                     skip_reason(test, display)))
    return TestSuite(defn.test_id, xs, contrasts, tuple(points), display)
