"""Display model and color pipeline.

Images move through this package in two forms.  A *luminance image* is an
(H, W, 3) float64 array holding, per display primary, the luminance in
cd/m^2 that the primary is driven to reproduce relative to its share of the
display white; an achromatic pixel therefore carries the same value in all
three channels, and a uniform gray field of total luminance L is the
constant array L.  A *display image* is an (H, W, 3) float64 array of
sRGB-encoded values in [0, 1] produced by :func:`display_encode`.  No 8-bit
quantization happens anywhere; previews that need bytes are labeled
non-authoritative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DisplayModel",
    "GamutError",
    "srgb_oetf",
    "srgb_eotf",
    "display_encode",
    "display_decode",
    "ChromaticDirection",
    "chromatic_direction",
    "chromatic_to_rgb_luminance",
    "gamut_limit",
    "RGB_TO_XYZ",
    "XYZ_TO_LMS",
    "RGB_TO_LMS",
    "LMS_TO_RGB",
]


class GamutError(ValueError):
    """A stimulus asks the display for light it cannot produce."""


# Linear sRGB -> CIE XYZ for the sRGB primaries and D65 white point,
# IEC 61966-2-1, at double precision (derived from the primary
# chromaticities, not the rounded 4-digit table).
RGB_TO_XYZ = np.array([
    [0.41239079926595934, 0.35758433938387800, 0.18048078840183430],
    [0.21263900587151027, 0.71516867876775600, 0.07219231536073371],
    [0.01933081871559182, 0.11919477979462598, 0.95053215224966070],
])

# CIE XYZ -> LMS cone excitations for the CIE 2006 2-degree cone
# fundamentals (Stockman & Sharpe), as tabulated at cvrl.org.
XYZ_TO_LMS = np.array([
    [0.187596268556126, 0.585168649077728, -0.026384263306304],
    [-0.133397430663221, 0.405505777260049, 0.034502127690364],
    [0.000244379021663, -0.000542995890619, 0.019406849066323],
])

RGB_TO_LMS = XYZ_TO_LMS @ RGB_TO_XYZ
LMS_TO_RGB = np.linalg.inv(RGB_TO_LMS)


@dataclass(frozen=True)
class DisplayModel:
    """Calibrated display the stimuli are rendered for.

    peak_luminance is the luminance of full white in cd/m^2,
    pixels_per_degree fixes the angular sampling, width/height are in
    pixels.  Defaults describe the reference display: 400 cd/m^2 peak,
    60 ppd, 224 x 224 (about 3.73 degrees across).
    """

    peak_luminance: float = 400.0
    pixels_per_degree: float = 60.0
    width: int = 224
    height: int = 224

    def __post_init__(self):
        if self.peak_luminance <= 0:
            raise ValueError("peak_luminance must be positive")
        if self.pixels_per_degree <= 0:
            raise ValueError("pixels_per_degree must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be at least 1 pixel")

    @property
    def degrees_width(self) -> float:
        return self.width / self.pixels_per_degree

    @property
    def degrees_height(self) -> float:
        return self.height / self.pixels_per_degree

    @property
    def nyquist(self) -> float:
        """Highest representable spatial frequency, cpd."""
        return self.pixels_per_degree / 2.0


_SRGB_LINEAR_CUT = 0.0031308
_SRGB_ENCODED_CUT = 0.04045


def srgb_oetf(x: np.ndarray) -> np.ndarray:
    """sRGB opto-electronic transfer: linear [0, 1] -> encoded [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    lo = x <= _SRGB_LINEAR_CUT
    out = np.empty_like(x)
    out[lo] = 12.92 * x[lo]
    out[~lo] = 1.055 * np.power(x[~lo], 1.0 / 2.4) - 0.055
    return out


def srgb_eotf(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`srgb_oetf` (encoded -> linear)."""
    v = np.asarray(v, dtype=np.float64)
    lo = v <= _SRGB_ENCODED_CUT
    out = np.empty_like(v)
    out[lo] = v[lo] / 12.92
    out[~lo] = np.power((v[~lo] + 0.055) / 1.055, 2.4)
    return out


def _check_image_shape(image: np.ndarray, display: DisplayModel) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    expected = (display.height, display.width, 3)
    if image.shape != expected:
        raise ValueError(
            f"image shape {image.shape} does not match display {expected}")
    return image


def display_encode(luminance: np.ndarray, display: DisplayModel) -> np.ndarray:
    """Render a luminance image to an sRGB display image in [0, 1].

    Per channel: v = srgb_oetf(clip(L / peak, 0, 1)).  Negative luminance
    is a hard error (the display cannot emit it); luminance above peak
    clips to full drive.
    """
    lum = _check_image_shape(luminance, display)
    if not np.all(np.isfinite(lum)):
        raise ValueError("luminance image contains non-finite values")
    if np.any(lum < 0):
        ch = int(np.unravel_index(np.argmin(lum), lum.shape)[2])
        raise GamutError(
            f"negative luminance: channel {'RGB'[ch]} reaches "
            f"{lum.min():.6g} cd/m^2")
    return srgb_oetf(np.clip(lum / display.peak_luminance, 0.0, 1.0))


def display_decode(image: np.ndarray, display: DisplayModel) -> np.ndarray:
    """Inverse display model: sRGB display image -> luminance image."""
    img = _check_image_shape(image, display)
    if np.any(img < 0) or np.any(img > 1):
        raise ValueError("display image values fall outside [0, 1]")
    return srgb_eotf(img) * display.peak_luminance


@dataclass(frozen=True)
class ChromaticDirection:
    """A modulation axis around a gray background, in cone increments.

    delta_lms is the LMS increment for one unit of contrast on top of the
    background's cone coordinates lms_background; delta_rgb is the same
    increment mapped to display primaries (cd/m^2 per channel).  For the
    chromatic axes contrast is measured in pooled cone-contrast units: at
    contrast c the vector (dL/L0, dM/M0, dS/S0) has Euclidean length c.
    The achromatic axis scales all cones together so that c is ordinary
    Michelson contrast.
    """

    tag: str
    background_luminance: float
    lms_background: np.ndarray
    delta_lms: np.ndarray
    delta_rgb: np.ndarray


def chromatic_direction(tag: str, background_luminance: float) -> ChromaticDirection:
    """Build the modulation axis for 'ach', 'rg' or 'yv' at a gray background.

    The gray background drives all three primaries equally, so its cone
    coordinates are RGB_TO_LMS @ (L_b, L_b, L_b).  Axes:

      ach: LMS0 itself (uniform scaling; c is Michelson contrast)
      rg:  a * (1, -1, 0), a = 1/hypot(1/L0, 1/M0)   (L+M held constant)
      yv:  (0, 0, S0)                                (L and M held constant)
    """
    if background_luminance <= 0:
        raise ValueError("background luminance must be positive")
    lms0 = RGB_TO_LMS @ np.full(3, float(background_luminance))
    if tag == "ach":
        delta_lms = lms0
        # uniform cone scaling maps back to an equal increment on all
        # three primaries; write it down exactly instead of round-tripping
        delta_rgb = np.full(3, float(background_luminance))
    elif tag == "rg":
        a = 1.0 / np.hypot(1.0 / lms0[0], 1.0 / lms0[1])
        delta_lms = np.array([a, -a, 0.0])
        delta_rgb = LMS_TO_RGB @ delta_lms
    elif tag == "yv":
        delta_lms = np.array([0.0, 0.0, lms0[2]])
        delta_rgb = LMS_TO_RGB @ delta_lms
    else:
        raise ValueError(f"unknown chromatic direction {tag!r}")
    return ChromaticDirection(tag, float(background_luminance), lms0,
                              delta_lms, delta_rgb)


def gamut_limit(tag: str, background_luminance: float,
                display: DisplayModel) -> float:
    """Largest contrast whose full +-1 modulation stays displayable.

    For 'ach' this is min(1, peak/L_b - 1); for chromatic axes it is set
    by the primary that first runs out of headroom in either direction.
    """
    if tag == "ach":
        return min(1.0, display.peak_luminance / background_luminance - 1.0)
    d = chromatic_direction(tag, background_luminance)
    limit = np.inf
    for sign in (1.0, -1.0):
        step = sign * d.delta_rgb
        for ch in range(3):
            if step[ch] < 0:
                limit = min(limit, background_luminance / -step[ch])
            elif step[ch] > 0:
                headroom = display.peak_luminance - background_luminance
                limit = min(limit, headroom / step[ch])
    return float(limit)


def chromatic_to_rgb_luminance(base: np.ndarray, tag: str,
                               background_luminance: float, contrast: float,
                               display: DisplayModel) -> np.ndarray:
    """Modulate the gray background along a DKL-style axis.

    base is an (H, W) pattern in [-1, 1]; the output luminance image is
    L_b + c * base * delta_rgb per channel.  The result is checked against
    the display gamut and rejected (never clipped) if any primary would go
    negative or exceed peak luminance.  At c = 0 the output is bit-equal
    to the uniform gray field.
    """
    base = np.asarray(base, dtype=np.float64)
    if base.shape != (display.height, display.width):
        raise ValueError(
            f"base pattern shape {base.shape} does not match display "
            f"({display.height}, {display.width})")
    if np.any(np.abs(base) > 1.0 + 1e-12):
        raise ValueError("base pattern exceeds [-1, 1]")
    if contrast < 0:
        raise ValueError("contrast must be non-negative")
    direction = chromatic_direction(tag, background_luminance)
    modulation = (contrast * base)[:, :, None] * direction.delta_rgb
    image = background_luminance + modulation
    lo = image.min(axis=(0, 1))
    hi = image.max(axis=(0, 1))
    for ch in range(3):
        if lo[ch] < 0:
            raise GamutError(
                f"out of gamut along {tag} at c={contrast:.6g}, "
                f"L_b={background_luminance:.6g}: channel {'RGB'[ch]} "
                f"reaches {lo[ch]:.6g} cd/m^2 (negative)")
        if hi[ch] > display.peak_luminance:
            raise GamutError(
                f"out of gamut along {tag} at c={contrast:.6g}, "
                f"L_b={background_luminance:.6g}: channel {'RGB'[ch]} "
                f"reaches {hi[ch]:.6g} cd/m^2 (peak is "
                f"{display.peak_luminance:.6g})")
    return image
