"""Synthetic encoders and independent oracles used by the tests.

These are instrumentation, not models: the oracle encoder is built from
the same grid plan the scorer will evaluate, so its feature angles are
an exact known function of the multiplier ladder; the readout encoder
recovers grating contrast analytically.  Both let tests pin down what
the scoring pipeline must report when the encoder behaves ideally.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from hvsbench import GamutError, display_decode, display_encode, s_ac
from hvsbench.alignment import GridPlan
from hvsbench.stimuli import MaskedSpec, masked_stimulus, synthesize


def _image_key(display_image: np.ndarray) -> str:
    arr = np.ascontiguousarray(display_image, dtype=np.float64)
    return hashlib.sha256(arr.tobytes()).hexdigest()


def _angle_features(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)], dtype=np.float64)


class OracleEncoder:
    """Monotone-by-construction encoder for one grid plan.

    Maps every reference image of the plan to feature angle 0 and every
    test image at multiplier index i to angle pi*(i+1)/(M+1), so
    S_ac(test, reference) = (i+1)/(M+1): identical floats for equal
    multipliers, strictly increasing across the ladder.  A perfect
    scorer must therefore report r_s = 1.0 exactly.
    """

    encoder_id = "oracle-monotone"

    def __init__(self, plan: GridPlan, display):
        m = plan.multipliers.size
        self._angles: dict = {}
        self.n_skipped_in_construction = 0
        for point in plan.points:
            if point.skip is not None:
                continue
            theta = math.pi * (point.i + 1) / (m + 1)
            for seed in (point.seeds or (0,)):
                test_spec, ref_spec = plan.specs_for(point, seed, display)
                try:
                    if isinstance(test_spec, MaskedSpec):
                        test_img, ref_img = masked_stimulus(
                            test_spec.mask, test_spec.test, display)
                    else:
                        test_img = synthesize(test_spec, display)
                        ref_img = synthesize(ref_spec, display)
                except GamutError:
                    self.n_skipped_in_construction += 1
                    continue
                self._angles[_image_key(display_encode(test_img,
                                                       display))] = theta
                self._angles[_image_key(display_encode(ref_img,
                                                       display))] = 0.0

    def features(self, image: np.ndarray) -> np.ndarray:
        key = _image_key(image)
        if key not in self._angles:
            raise KeyError(
                "oracle encoder saw an image outside its grid plan; the "
                "scorer and the plan have diverged")
        return _angle_features(self._angles[key])


class ContrastReadoutEncoder:
    """Frequency-free contrast readout: S_ac(image, uniform) = contrast.

    Decodes the display image back to luminance, measures Michelson
    contrast c, and emits the unit vector at angle pi*c, so the angle
    distance to the uniform field's features (angle 0) equals c.  Exact
    only when the pixel grid samples the grating extrema, which holds
    for the frequencies used in the tests.
    """

    encoder_id = "contrast-readout"

    def __init__(self, display):
        self._display = display

    def readout(self, image: np.ndarray) -> float:
        luminance = display_decode(image, self._display)
        lmax = float(luminance.max())
        lmin = float(luminance.min())
        return (lmax - lmin) / (lmax + lmin)

    def features(self, image: np.ndarray) -> np.ndarray:
        return _angle_features(math.pi * self.readout(image))


# Frequencies whose sine extrema fall exactly on the integer pixel grid
# of the 60 ppd display (an integer x with rho*x = 15 mod 30 exists),
# so Michelson readout recovers the nominal contrast exactly.
EXACT_PEAK_FREQUENCIES = (0.25, 0.5, 1.0, 2.5, 5.0, 7.0, 15.0, 25.0)


def spearman_oracle(a, b) -> float:
    """Brute-force Spearman: closed-form average ranks + fsum Pearson."""
    av = [float(v) for v in np.asarray(a, dtype=np.float64).ravel()]
    bv = [float(v) for v in np.asarray(b, dtype=np.float64).ravel()]
    assert len(av) == len(bv) and len(av) >= 2

    def ranks(values):
        out = []
        for v in values:
            below = sum(1 for w in values if w < v)
            tied = sum(1 for w in values if w == v) - 1
            out.append(1.0 + below + 0.5 * tied)
        return out

    ra, rb = ranks(av), ranks(bv)
    n = len(ra)
    ma = math.fsum(ra) / n
    mb = math.fsum(rb) / n
    cov = math.fsum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = math.fsum((x - ma) ** 2 for x in ra)
    vb = math.fsum((y - mb) ** 2 for y in rb)
    assert va > 0 and vb > 0, "degenerate input reached the oracle"
    return cov / math.sqrt(va * vb)


def angle_vector(theta: float) -> np.ndarray:
    return _angle_features(theta)


def assert_sac_equals_angle() -> None:
    """Sanity check used by tests: S_ac of angle vectors is theta/pi."""
    for theta in (0.1, 0.5, 1.0, 2.0, 3.0):
        got = s_ac(_angle_features(theta), _angle_features(0.0))
        assert abs(got - theta / math.pi) < 1e-12
