"""Psychophysical alignment tests for image encoders.

Synthesizes calibrated detection, masking, and contrast-matching
stimuli on a reference display model, measures feature-space response
with the cosine-angle distance S_ac, and scores encoders against human
psychophysical data.
"""

from .alignment import (AlignmentResult, AlignmentSample, ContourGrid,
                        DegenerateDataError, MatchResult, contour_grid,
                        contrast_match, detection_alignment,
                        masking_alignment, match_curves, matching_rmse,
                        multipliers, spearman)
from .colorimetry import (ChromaticDirection, DisplayModel, GamutError,
                          chromatic_direction, display_decode, display_encode,
                          gamut_limit, srgb_eotf, srgb_oetf)
from .encoders import (AdapterPool, EncoderError, EncoderFailure,
                       FeatureVector, ProtocolError, RawPixelEncoder,
                       SubprocessEncoder, encode, open_encoder)
from .featurefile import (FeatureFileError, read_feature_file,
                          write_feature_file)
from .metrics import l1_distance, l2_distance, s_ac
from .refdata import (CurveDomainError, CurveFormatError, GroundTruthCurve,
                      StandInCSF, load_curve, load_default_curve,
                      load_default_matching_curves, threshold_at)
from .stimuli import (GaborSpec, GratingSpec, MaskedSpec, NoiseSpec,
                      TEST_ALIASES, TEST_IDS, TESTS, TestDef, UniformSpec,
                      band_limited_noise, build_test_suite, gabor, grating,
                      masked_stimulus, noise_band_for, resolve_test_id,
                      stable_seed, synthesize, uniform_field)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult", "AlignmentSample", "ContourGrid",
    "DegenerateDataError", "MatchResult", "contour_grid", "contrast_match",
    "detection_alignment", "masking_alignment", "match_curves",
    "matching_rmse", "multipliers", "spearman",
    "ChromaticDirection", "DisplayModel", "GamutError",
    "chromatic_direction", "display_decode", "display_encode", "gamut_limit",
    "srgb_eotf", "srgb_oetf",
    "AdapterPool", "EncoderError", "EncoderFailure", "FeatureVector",
    "ProtocolError", "RawPixelEncoder", "SubprocessEncoder", "encode",
    "open_encoder",
    "FeatureFileError", "read_feature_file", "write_feature_file",
    "l1_distance", "l2_distance", "s_ac",
    "CurveDomainError", "CurveFormatError", "GroundTruthCurve", "StandInCSF",
    "load_curve", "load_default_curve", "load_default_matching_curves",
    "threshold_at",
    "GaborSpec", "GratingSpec", "MaskedSpec", "NoiseSpec", "TEST_ALIASES",
    "TEST_IDS", "TESTS", "TestDef", "UniformSpec", "band_limited_noise",
    "build_test_suite", "gabor", "grating", "masked_stimulus",
    "noise_band_for", "resolve_test_id", "stable_seed", "synthesize",
    "uniform_field",
    "__version__",
]
