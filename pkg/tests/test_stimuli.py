import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hvsbench import (DisplayModel, GaborSpec, GamutError, GratingSpec,
                      MaskedSpec, NoiseSpec, TESTS, TEST_IDS, UniformSpec,
                      band_limited_noise, build_test_suite, gabor, grating,
                      masked_stimulus, noise_band_for, resolve_test_id,
                      stable_seed, synthesize, uniform_field)
from hvsbench.stimuli import (_noise_pattern, detection_point, masking_point,
                              reference_for, skip_reason, spec_from_dict,
                              spec_to_dict)


def test_zero_contrast_gabor_is_uniform_bit_exact(display):
    img = gabor(GaborSpec(5.0, 100.0, 1.0, 0.0), display)
    assert np.array_equal(img, uniform_field(100.0, display))


def test_zero_contrast_chromatic_gabor_is_uniform_bit_exact(display):
    for direction in ("rg", "yv"):
        img = gabor(GaborSpec(2.0, 100.0, 1.0, 0.0, direction=direction),
                    display)
        assert np.array_equal(img, uniform_field(100.0, display))


def test_center_pixel_is_background_for_sine_phase(display):
    # the integer pixel grid contains x = y = 0, where sin(0) = 0
    cy, cx = display.height // 2, display.width // 2
    for spec in (GaborSpec(3.7, 80.0, 0.8, 0.9),
                 GratingSpec(3.7, 80.0, 0.9),
                 GaborSpec(5.0, 100.0, 1.0, 0.1, direction="rg")):
        img = synthesize(spec, display)
        assert np.array_equal(img[cy, cx], np.full(3, spec.luminance))


def test_grating_extremes_reach_michelson_levels(display):
    # 5 cpd at 60 ppd puts sine extrema exactly on the pixel grid
    lum, c = 10.0, 0.629
    img = grating(GratingSpec(5.0, lum, c), display)
    assert abs(img.max() - lum * (1 + c)) < 1e-9
    assert abs(img.min() - lum * (1 - c)) < 1e-9


def test_gabor_center_column_reaches_envelope_peak(display):
    # at y = 0 the envelope is exp(-x^2 / (2 sigma^2)); the quarter-cycle
    # pixel x = 3 for 5 cpd carries sin = 1 exactly
    lum, c, radius = 100.0, 0.5, 1.0
    img = gabor(GaborSpec(5.0, lum, radius, c), display)
    cy, cx = display.height // 2, display.width // 2
    x = 3.0
    sigma = display.pixels_per_degree * radius
    expected = lum * (1 + c * np.exp(-x * x / (2 * sigma * sigma)))
    assert abs(img[cy, cx + 3, 0] - expected) < 1e-9


def test_wide_envelope_gabor_approaches_grating(display):
    g1 = gabor(GaborSpec(4.0, 50.0, 1e6, 0.4), display)
    g2 = grating(GratingSpec(4.0, 50.0, 0.4), display)
    assert np.max(np.abs(g1 - g2)) < 1e-9


def test_grating_odd_symmetry_about_center(display):
    img = grating(GratingSpec(3.3, 60.0, 0.7), display)[:, :, 0]
    cx = display.width // 2
    for k in (1, 5, 40, 111):
        s = img[0, cx + k] + img[0, cx - k]
        assert abs(s - 2 * 60.0) < 1e-9


def test_integer_cycle_grating_has_background_mean(display):
    # 7.5 cpd over 224 px at 60 ppd is exactly 28 cycles
    img = grating(GratingSpec(7.5, 90.0, 0.8), display)
    assert abs(img.mean() - 90.0) < 1e-9 * 90.0


def test_achromatic_contrast_above_one_is_gamut_error(display):
    with pytest.raises(GamutError):
        grating(GratingSpec(2.0, 100.0, 1.01), display)
    with pytest.raises(GamutError):
        gabor(GaborSpec(2.0, 100.0, 1.0, 1.2), display)


def test_chromatic_contrast_beyond_gamut_is_error(display):
    with pytest.raises(GamutError, match="rg"):
        gabor(GaborSpec(2.0, 100.0, 1.0, 0.5, direction="rg"), display)
    gabor(GaborSpec(2.0, 100.0, 1.0, 0.12, direction="rg"), display)
    gabor(GaborSpec(2.0, 100.0, 1.0, 0.8, direction="yv"), display)


def test_spec_validation_errors(display):
    with pytest.raises(ValueError):
        gabor(GaborSpec(-1.0, 100.0, 1.0, 0.1), display)
    with pytest.raises(ValueError):
        gabor(GaborSpec(1.0, 0.0, 1.0, 0.1), display)
    with pytest.raises(ValueError):
        gabor(GaborSpec(1.0, 100.0, 0.0, 0.1), display)
    with pytest.raises(ValueError):
        grating(GratingSpec(1.0, 100.0, -0.1), display)


def test_noise_sample_std_is_contrast_times_background(display):
    lum, c = 100.0, 0.123
    spec = NoiseSpec(3.5355, 7.0711, lum, c, seed=42)
    img = band_limited_noise(spec, display)
    single = img[:, :, 0]
    assert abs(single.std() - c * lum) < 1e-6 * c * lum
    assert np.array_equal(img[:, :, 0], img[:, :, 1])
    assert np.array_equal(img[:, :, 0], img[:, :, 2])


def test_noise_out_of_band_energy_is_negligible(display):
    f_lo, f_hi = 3.5355, 7.0711
    pattern = _noise_pattern(NoiseSpec(f_lo, f_hi, 100.0, 0.1, seed=7),
                             display)
    spectrum = np.abs(np.fft.fft2(pattern)) ** 2
    fu = np.fft.fftfreq(display.width, d=1.0 / display.pixels_per_degree)
    fv = np.fft.fftfreq(display.height, d=1.0 / display.pixels_per_degree)
    radial = np.hypot(fu[None, :], fv[:, None])
    in_band = (radial >= f_lo) & (radial <= f_hi)
    total = spectrum.sum()
    assert spectrum[~in_band].sum() / total < 1e-9


def test_noise_is_seed_deterministic(display):
    a = band_limited_noise(NoiseSpec(2.0, 4.0, 50.0, 0.1, seed=9), display)
    b = band_limited_noise(NoiseSpec(2.0, 4.0, 50.0, 0.1, seed=9), display)
    c = band_limited_noise(NoiseSpec(2.0, 4.0, 50.0, 0.1, seed=10), display)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noise_band_validation(display):
    with pytest.raises(ValueError, match="invalid noise band"):
        band_limited_noise(NoiseSpec(4.0, 2.0, 50.0, 0.1, 0), display)
    with pytest.raises(ValueError, match="invalid noise band"):
        band_limited_noise(NoiseSpec(2.0, 31.0, 50.0, 0.1, 0), display)
    with pytest.raises(ValueError, match="no FFT bin"):
        band_limited_noise(NoiseSpec(0.01, 0.02, 50.0, 0.1, 0), display)
    with pytest.raises(ValueError, match="constant"):
        # only the DC bin falls inside [0, 0.1] cpd
        band_limited_noise(NoiseSpec(0.0, 0.1, 50.0, 0.1, 0), display)


def test_noise_negative_luminance_is_gamut_error(display):
    with pytest.raises(GamutError, match="negative"):
        band_limited_noise(NoiseSpec(2.0, 4.0, 50.0, 0.9, seed=1), display)


def test_noise_band_for_clips_to_nyquist(display):
    lo, hi = noise_band_for(5.0, display)
    assert abs(lo - 5.0 / np.sqrt(2)) < 1e-12
    assert abs(hi - 5.0 * np.sqrt(2)) < 1e-12
    lo, hi = noise_band_for(32.0, display)
    assert hi == display.nyquist
    assert lo < hi
    with pytest.raises(ValueError, match="collapses"):
        noise_band_for(60.0, display)


def test_masked_zero_test_contrast_equals_reference(display):
    mask = GratingSpec(2.0, 32.0, 0.2)
    test = GaborSpec(2.0, 32.0, 0.5, 0.0)
    test_img, ref_img = masked_stimulus(mask, test, display)
    assert np.array_equal(test_img, ref_img)


def test_masked_modulations_add_linearly(display):
    mask = GratingSpec(2.0, 32.0, 0.2)
    test = GaborSpec(2.0, 32.0, 0.5, 0.1)
    test_img, ref_img = masked_stimulus(mask, test, display)
    alone = gabor(test, display)
    uniform = uniform_field(32.0, display)
    assert np.max(np.abs((test_img - ref_img) - (alone - uniform))) < 1e-9


def test_masked_noise_realization_is_shared(display):
    mask = NoiseSpec(0.0001, 12.0, 37.0, 0.1, seed=5)
    test = GaborSpec(1.2, 37.0, 0.8, 0.05)
    t1, r1 = masked_stimulus(mask, test, display)
    t2, r2 = masked_stimulus(mask, test, display)
    assert np.array_equal(t1, t2) and np.array_equal(r1, r2)
    # the same realization underlies test and reference
    alone = gabor(test, display) - uniform_field(37.0, display)
    assert np.max(np.abs((t1 - r1) - alone)) < 1e-9


def test_masked_validation(display):
    with pytest.raises(ValueError, match="share"):
        masked_stimulus(GratingSpec(2.0, 32.0, 0.2),
                        GaborSpec(2.0, 30.0, 0.5, 0.1), display)
    with pytest.raises(ValueError, match="achromatic"):
        masked_stimulus(GratingSpec(2.0, 32.0, 0.2, direction="rg"),
                        GaborSpec(2.0, 32.0, 0.5, 0.1), display)
    with pytest.raises(GamutError):
        masked_stimulus(GratingSpec(2.0, 32.0, 0.7),
                        GaborSpec(2.0, 32.0, 0.5, 0.7), display)


def test_stable_seed_is_stable_and_distinct():
    assert stable_seed(0, "a", 1) == stable_seed(0, "a", 1)
    assert stable_seed(0, "a", 1) != stable_seed(0, "a", 2)
    assert stable_seed(0, "a", 1) != stable_seed(1, "a", 1)
    assert 0 <= stable_seed("x") < 2 ** 64


def test_spec_dict_round_trip(display):
    specs = [UniformSpec(10.0),
             GaborSpec(5.0, 100.0, 1.0, 0.2, 0.5, "rg"),
             GratingSpec(2.0, 32.0, 0.3),
             NoiseSpec(1.0, 2.0, 50.0, 0.1, 12345),
             MaskedSpec(NoiseSpec(0.0001, 12.0, 37.0, 0.1, 5),
                        GaborSpec(1.2, 37.0, 0.8, 0.05))]
    for spec in specs:
        assert spec_from_dict(spec_to_dict(spec)) == spec
    with pytest.raises(ValueError, match="unknown"):
        spec_from_dict({"type": "plaid"})


def test_battery_matches_published_parameters():
    assert len(TEST_IDS) == 9
    t = TESTS["spatial-freq-gabor-ach"]
    assert t.x_range == (0.5, 32.0) and t.luminance == 100.0
    assert t.radius == 1.0 and t.contrast_range == (0.001, 1.0)
    assert TESTS["spatial-freq-gabor-rg"].contrast_range == (0.001, 0.12)
    assert TESTS["spatial-freq-gabor-yv"].contrast_range == (0.001, 0.8)
    lum = TESTS["luminance-gabor-ach"]
    assert lum.x_range == (0.1, 200.0) and lum.rho == 2.0
    area = TESTS["area-gabor-ach"]
    assert area.x_range == (0.1, 1.0) and area.rho == 8.0
    coh = TESTS["masking-phase-coherent"]
    assert coh.luminance == 32.0 and coh.mask_rho == 2.0
    assert coh.test_rho == 2.0 and coh.test_radius == 0.5
    incoh = TESTS["masking-phase-incoherent"]
    assert incoh.luminance == 37.0 and incoh.mask_band == (0.0, 12.0)
    assert incoh.test_rho == 1.2 and incoh.test_radius == 0.8
    match = TESTS["contrast-matching"]
    assert match.reference_rho == 5.0 and match.luminance == 10.0
    assert match.x_range == (0.25, 25.0)
    assert match.reference_contrasts[0] == 0.005
    assert match.reference_contrasts[-1] == 0.629
    assert len(match.reference_contrasts) == 8


def test_resolve_test_id():
    assert resolve_test_id("gabor-ach") == "spatial-freq-gabor-ach"
    assert resolve_test_id("spatial-freq-gabor-ach") == \
        "spatial-freq-gabor-ach"
    with pytest.raises(KeyError, match="unknown test"):
        resolve_test_id("nonsense")


def test_detection_point_axes(display):
    defn = TESTS["luminance-gabor-ach"]
    spec, ref = detection_point(defn, 5.0, 0.1, 0, display)
    assert spec.luminance == 5.0 and ref == UniformSpec(5.0)
    defn = TESTS["area-gabor-ach"]
    spec, ref = detection_point(defn, 0.3, 0.1, 0, display)
    assert spec.radius == 0.3 and spec.rho == 8.0
    defn = TESTS["spatial-freq-noise-ach"]
    spec, ref = detection_point(defn, 4.0, 0.1, 77, display)
    assert isinstance(spec, NoiseSpec) and spec.seed == 77
    lo, hi = noise_band_for(4.0, display)
    assert (spec.f_lo, spec.f_hi) == (lo, hi)


def test_masking_point_shapes(display):
    coh = masking_point(TESTS["masking-phase-coherent"], 0.1, 0.05, 0)
    assert isinstance(coh.mask, GratingSpec) and coh.mask.contrast == 0.1
    incoh = masking_point(TESTS["masking-phase-incoherent"], 0.1, 0.05, 9)
    assert isinstance(incoh.mask, NoiseSpec) and incoh.mask.seed == 9
    assert incoh.mask.f_lo == 0.0 and incoh.mask.f_hi == 12.0


def test_skip_reasons(display):
    assert skip_reason(GaborSpec(2.0, 100.0, 1.0, 0.5), display) is None
    assert "negative" in skip_reason(GaborSpec(2.0, 100.0, 1.0, 1.5),
                                     display)
    assert "gamut" in skip_reason(
        GaborSpec(2.0, 100.0, 1.0, 0.5, direction="rg"), display)
    masked = MaskedSpec(GratingSpec(2.0, 32.0, 0.7),
                        GaborSpec(2.0, 32.0, 0.5, 0.6))
    assert "combined" in skip_reason(masked, display)


def test_build_test_suite_shapes(display):
    suite = build_test_suite("gabor-ach", display)
    assert len(suite.points) == 400
    assert suite.x_values[0] == 0.5 and suite.x_values[-1] == 32.0
    assert suite.contrast_values[0] == 0.001
    assert suite.contrast_values[-1] == 1.0
    match = build_test_suite("matching", display)
    assert len(match.contrast_values) == 8
    assert len(match.points) == 20 * 8
    ref = match.points[0].reference
    assert isinstance(ref, GratingSpec) and ref.rho == 5.0


def test_reference_for(display):
    assert np.array_equal(
        reference_for(GaborSpec(5.0, 100.0, 1.0, 0.1), display),
        uniform_field(100.0, display))
    masked = MaskedSpec(GratingSpec(2.0, 32.0, 0.2),
                        GaborSpec(2.0, 32.0, 0.5, 0.1))
    assert np.array_equal(reference_for(masked, display),
                          masked_stimulus(masked.mask, masked.test,
                                          display)[1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 30.0), st.floats(0.001, 1.0), st.floats(0.1, 2.0))
def test_gabor_deviation_bounded_by_contrast(rho, c, radius):
    display = DisplayModel(width=64, height=64)
    img = gabor(GaborSpec(rho, 100.0, radius, c), display)
    assert np.max(np.abs(img - 100.0)) <= 100.0 * c * (1 + 1e-12)
