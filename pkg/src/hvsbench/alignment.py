"""Human-alignment scoring of feature encoders.

Detection and masking tests sample each threshold curve with a fixed
ladder of contrast multipliers, compute the feature-angle distance S_ac
between every stimulus and its reference, and rank-correlate the pooled
distances against the multipliers.  Supra-threshold matching solves, per
test frequency, for the contrast whose S_ac matches the reference
grating's, and reports a log-domain RMSE against human matching data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import stimuli
from .colorimetry import DisplayModel, GamutError, display_encode, gamut_limit
from .encoders import EncoderFailure
from .metrics import s_ac
from .refdata import (CurveDomainError, GroundTruthCurve, StandInCSF,
                      gabor_area, threshold_at)
from .stimuli import (GratingSpec, MaskedSpec, TestDef, TESTS, UniformSpec,
                      resolve_test_id, stable_seed, synthesize, uniform_field)

__all__ = [
    "DegenerateDataError", "EncoderProtocolLike", "multipliers", "spearman",
    "AlignmentSample", "AlignmentResult", "detection_alignment",
    "masking_alignment", "MatchResult", "contrast_match", "match_curves",
    "matching_rmse", "ContourGrid", "contour_grid", "score_samples",
]

DEFAULT_CONDITIONS = 20
DEFAULT_MULTIPLIERS = 10
DEFAULT_NOISE_SEEDS = 5
UNRELIABLE_SKIP_FRACTION = 0.20


class DegenerateDataError(ValueError):
    """Rank correlation is undefined on the given data."""


class EncoderProtocolLike:
    """Duck type every encoder satisfies: encoder_id + features(image)."""

    encoder_id: str

    def features(self, image: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


def multipliers(m: int = DEFAULT_MULTIPLIERS) -> np.ndarray:
    """Contrast multiplier ladder: m values log-spaced from 0.5 to 2.

    Computed as 0.5 * 4**((i-1)/(M-1)), which is the log10-uniform ladder
    10**(log10(0.5) + (i-1)/(M-1) * log10(4)) with exact endpoints.
    """
    if m < 2:
        raise ValueError("need at least 2 multipliers")
    return 0.5 * np.power(4.0, np.arange(m) / (m - 1))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank run."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Spearman rank correlation: Pearson on average-ranked data.

    Ties get average ranks.  All-equal input on either side leaves the
    statistic undefined and raises DegenerateDataError.  Identical (or
    exactly opposite) rank vectors return exactly +-1.0; the Pearson
    quotient on equal vectors lands one ulp shy.
    """
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.size != bv.size:
        raise ValueError(f"length mismatch: {av.size} vs {bv.size}")
    if av.size < 2:
        raise ValueError("need at least 2 observations")
    if not (np.all(np.isfinite(av)) and np.all(np.isfinite(bv))):
        raise ValueError("non-finite observations")
    if np.all(av == av[0]):
        raise DegenerateDataError("first input is constant; ranks undefined")
    if np.all(bv == bv[0]):
        raise DegenerateDataError("second input is constant; ranks undefined")
    ra = _average_ranks(av)
    rb = _average_ranks(bv)
    if np.array_equal(ra, rb):
        return 1.0
    if np.array_equal(ra, ra.size + 1.0 - rb):
        return -1.0
    ra -= ra.mean()
    rb -= rb.mean()
    r = float(np.dot(ra, rb) / (np.linalg.norm(ra) * np.linalg.norm(rb)))
    return max(-1.0, min(1.0, r))


# --------------------------------------------------------------------------
# Grid plans: which stimuli a detection/masking run will score


@dataclass(frozen=True)
class PlannedPoint:
    j: int
    i: int
    x: float
    contrast: float
    seeds: tuple            # () for deterministic stimuli
    skip: Optional[str]


@dataclass(frozen=True, eq=False)
class GridPlan:
    test_id: str
    kind: str
    conditions: np.ndarray       # X_j
    thresholds: np.ndarray       # Y_j, threshold contrast per condition
    multipliers: np.ndarray      # m_i
    points: tuple                # PlannedPoint, row-major over (j, i)
    curve_source: str

    def specs_for(self, point: PlannedPoint, seed: int,
                  display: DisplayModel):
        """(test_spec, ref_spec) realizing one planned point."""
        defn = TESTS[self.test_id]
        if self.kind == "detection":
            return stimuli.detection_point(defn, point.x, point.contrast,
                                           seed, display)
        masked = stimuli.masking_point(defn, point.x, point.contrast, seed)
        return masked, masked.mask


def _thresholds_from_curve(defn: TestDef, curve: Optional[GroundTruthCurve],
                           xs: np.ndarray) -> tuple[np.ndarray, str]:
    if curve is None:
        if defn.direction != "ach":
            raise ValueError(
                f"{defn.test_id} is chromatic; measured ground-truth curves "
                "are required (the stand-in CSF is achromatic only)")
        if defn.kind != "detection":
            raise ValueError(f"{defn.test_id} requires a measured curve")
        csf = StandInCSF()
        if defn.x_axis == "cpd":
            sens = csf.sensitivity(xs, defn.luminance,
                                   gabor_area(defn.radius or 1.0))
        elif defn.x_axis == "cd_per_m2":
            sens = csf.sensitivity(defn.rho, xs, gabor_area(defn.radius))
        else:
            sens = csf.sensitivity(defn.rho, defn.luminance,
                                   np.asarray([gabor_area(x) for x in xs]))
        return 1.0 / np.asarray(sens, dtype=np.float64), "standin-csf"
    if curve.y_axis == "matched_contrast":
        raise ValueError("matching curves cannot drive a detection test")
    lo, hi = curve.domain
    if lo > xs.min() or hi < xs.max():
        raise CurveDomainError(
            f"curve for {defn.test_id} covers [{lo:.6g}, {hi:.6g}] but the "
            f"test needs [{xs.min():.6g}, {xs.max():.6g}]")
    vals = threshold_at(curve, xs)
    if curve.y_axis == "sensitivity":
        vals = 1.0 / vals
    return np.asarray(vals, dtype=np.float64), curve.source


def plan_detection_grid(test_id: str, display: DisplayModel,
                        curve: Optional[GroundTruthCurve] = None,
                        n_conditions: int = DEFAULT_CONDITIONS,
                        n_multipliers: int = DEFAULT_MULTIPLIERS,
                        noise_seeds: int = DEFAULT_NOISE_SEEDS,
                        seed_base: int = 0) -> GridPlan:
    """Plan the (condition x multiplier) sampling grid for a detection test.

    Conditions are log-spaced over the tabulated range, endpoints
    included; the sampled contrast at (j, i) is m_i * Y_j.  Points the
    display cannot reproduce carry a skip reason.
    """
    defn = TESTS[resolve_test_id(test_id)]
    if defn.kind != "detection":
        raise ValueError(f"{test_id} is not a detection test")
    xs = np.geomspace(defn.x_range[0], defn.x_range[1], n_conditions)
    ys, source = _thresholds_from_curve(defn, curve, xs)
    ms = multipliers(n_multipliers)
    n_seeds = noise_seeds if defn.stimulus == "noise" else 0
    points = []
    for j, x in enumerate(xs):
        for i, m in enumerate(ms):
            c = float(m * ys[j])
            seeds = tuple(
                stable_seed(seed_base, defn.test_id, j, i, k)
                for k in range(n_seeds))
            probe_seed = seeds[0] if seeds else 0
            spec, _ = stimuli.detection_point(defn, float(x), c, probe_seed,
                                              display)
            points.append(PlannedPoint(j, i, float(x), c, seeds,
                                       stimuli.skip_reason(spec, display)))
    return GridPlan(defn.test_id, "detection", xs, ys, ms, tuple(points),
                    source)


def plan_masking_grid(test_id: str, display: DisplayModel,
                      curve: GroundTruthCurve,
                      n_multipliers: int = DEFAULT_MULTIPLIERS,
                      noise_seeds: int = DEFAULT_NOISE_SEEDS,
                      seed_base: int = 0) -> GridPlan:
    """Plan the masking grid: one condition per human data point.

    The mask contrasts are the curve's own x values and Y_j its measured
    test thresholds, so N equals the number of human data points.
    """
    defn = TESTS[resolve_test_id(test_id)]
    if defn.kind != "masking":
        raise ValueError(f"{test_id} is not a masking test")
    if curve is None:
        raise ValueError(f"{defn.test_id} requires a measured curve")
    if curve.y_axis != "threshold_contrast":
        raise ValueError(
            f"masking curve must give threshold_contrast, got "
            f"{curve.y_axis!r}")
    lo, hi = defn.x_range
    if curve.x.min() < lo or curve.x.max() > hi:
        raise CurveDomainError(
            f"mask contrasts [{curve.x.min():.6g}, {curve.x.max():.6g}] fall "
            f"outside the tabulated range [{lo:.6g}, {hi:.6g}]")
    xs = np.asarray(curve.x, dtype=np.float64)
    ys = np.asarray(curve.y, dtype=np.float64)
    ms = multipliers(n_multipliers)
    n_seeds = noise_seeds if defn.mask_band is not None else 0
    points = []
    for j, x in enumerate(xs):
        for i, m in enumerate(ms):
            c = float(m * ys[j])
            seeds = tuple(
                stable_seed(seed_base, defn.test_id, j, i, k)
                for k in range(n_seeds))
            spec = stimuli.masking_point(defn, float(x), c,
                                         seeds[0] if seeds else 0)
            points.append(PlannedPoint(j, i, float(x), c, seeds,
                                       stimuli.skip_reason(spec, display)))
    return GridPlan(defn.test_id, "masking", xs, ys, ms, tuple(points),
                    curve.source)


# --------------------------------------------------------------------------
# Scoring


@dataclass(frozen=True)
class AlignmentSample:
    j: int
    i: int
    x: float
    contrast: float
    s_ac: Optional[float]
    per_seed: tuple
    skip: Optional[str]


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    test_id: str
    encoder_id: str
    kind: str
    r_s: float
    unreliable: bool
    n_total: int
    n_skipped: int
    conditions: np.ndarray
    thresholds: np.ndarray
    multipliers: np.ndarray
    samples: tuple
    curve_source: str

    @property
    def skip_fraction(self) -> float:
        return self.n_skipped / self.n_total if self.n_total else 0.0


def _encode_features(encoder, image: np.ndarray,
                     display: DisplayModel) -> np.ndarray:
    return np.asarray(encoder.features(display_encode(image, display)),
                      dtype=np.float64).ravel()


def _evaluate_plan(encoder, plan: GridPlan, display: DisplayModel,
                   parallel: int = 1) -> list:
    """One AlignmentSample per planned point, preserving grid order."""

    ref_cache: dict = {}

    def eval_point(point: PlannedPoint) -> AlignmentSample:
        if point.skip is not None:
            return AlignmentSample(point.j, point.i, point.x, point.contrast,
                                   None, (), point.skip)
        seeds: Sequence[int] = point.seeds if point.seeds else (0,)
        values = []
        try:
            for seed in seeds:
                test_spec, ref_spec = plan.specs_for(point, seed, display)
                if isinstance(test_spec, MaskedSpec):
                    test_img, ref_img = stimuli.masked_stimulus(
                        test_spec.mask, test_spec.test, display)
                    f_ref = _encode_features(encoder, ref_img, display)
                else:
                    test_img = synthesize(test_spec, display)
                    key = ref_spec
                    if key not in ref_cache:
                        ref_cache[key] = _encode_features(
                            encoder, synthesize(ref_spec, display), display)
                    f_ref = ref_cache[key]
                f_test = _encode_features(encoder, test_img, display)
                values.append(s_ac(f_test, f_ref))
        except GamutError as exc:
            return AlignmentSample(point.j, point.i, point.x, point.contrast,
                                   None, (), f"gamut: {exc}")
        except EncoderFailure as exc:
            return AlignmentSample(point.j, point.i, point.x, point.contrast,
                                   None, (), f"encoder: {exc}")
        mean = float(np.mean(values))
        per_seed = tuple(values) if point.seeds else ()
        return AlignmentSample(point.j, point.i, point.x, point.contrast,
                               mean, per_seed, None)

    if parallel > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(eval_point, plan.points))
    return [eval_point(point) for point in plan.points]


def score_samples(samples: Sequence[AlignmentSample],
                  ms: np.ndarray) -> tuple[float, bool, int]:
    """Pooled Spearman between multipliers and S_ac, skipping skipped points.

    Returns (r_s, unreliable, n_skipped); unreliable means more than 20%
    of the grid was skipped.
    """
    kept_m = [float(ms[s.i]) for s in samples if s.skip is None]
    kept_s = [s.s_ac for s in samples if s.skip is None]
    n_skipped = len(samples) - len(kept_m)
    if len(kept_m) < 2:
        raise DegenerateDataError(
            f"only {len(kept_m)} usable grid points; cannot rank-correlate")
    r = spearman(kept_m, kept_s)
    unreliable = n_skipped > UNRELIABLE_SKIP_FRACTION * len(samples)
    return r, unreliable, n_skipped


def _result_from_plan(encoder, plan: GridPlan, display: DisplayModel,
                      parallel: int) -> AlignmentResult:
    samples = _evaluate_plan(encoder, plan, display, parallel)
    r, unreliable, n_skipped = score_samples(samples, plan.multipliers)
    return AlignmentResult(
        test_id=plan.test_id, encoder_id=encoder.encoder_id, kind=plan.kind,
        r_s=r, unreliable=unreliable, n_total=len(samples),
        n_skipped=n_skipped, conditions=plan.conditions,
        thresholds=plan.thresholds, multipliers=plan.multipliers,
        samples=tuple(samples), curve_source=plan.curve_source)


def detection_alignment(encoder, test_id: str, display: DisplayModel,
                        curve: Optional[GroundTruthCurve] = None,
                        n_conditions: int = DEFAULT_CONDITIONS,
                        n_multipliers: int = DEFAULT_MULTIPLIERS,
                        noise_seeds: int = DEFAULT_NOISE_SEEDS,
                        seed_base: int = 0,
                        parallel: int = 1) -> AlignmentResult:
    """Spearman alignment of an encoder on one detection test.

    For every condition X_j the human threshold Y_j comes from the curve
    (1/sensitivity for sensitivity curves); stimuli are generated at
    contrasts m_i * Y_j and S_ac is measured against the condition's
    reference.  Noise stimuli average S_ac over noise_seeds realizations
    before ranking; per-seed values are retained in the samples.
    """
    plan = plan_detection_grid(test_id, display, curve, n_conditions,
                               n_multipliers, noise_seeds, seed_base)
    return _result_from_plan(encoder, plan, display, parallel)


def masking_alignment(encoder, test_id: str, display: DisplayModel,
                      curve: GroundTruthCurve,
                      n_multipliers: int = DEFAULT_MULTIPLIERS,
                      noise_seeds: int = DEFAULT_NOISE_SEEDS,
                      seed_base: int = 0,
                      parallel: int = 1) -> AlignmentResult:
    """Like detection_alignment with mask contrast as the condition axis.

    The reference for every grid point is the mask alone; for noise masks
    the realization is shared between test and reference within a point.
    """
    plan = plan_masking_grid(test_id, display, curve, n_multipliers,
                             noise_seeds, seed_base)
    return _result_from_plan(encoder, plan, display, parallel)


# --------------------------------------------------------------------------
# Supra-threshold contrast matching


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MatchResult:
    rho_t: float
    c_ref: float
    c_match: float
    status: str              # converged | boundary | non-monotone-fallback
    objective: float
    target: float


def _golden_refine(fn: Callable[[float], float], lo: float, hi: float,
                   rel_tol: float) -> float:
    """Golden-section minimum of fn over [lo, hi] in log space."""
    a, b = math.log(lo), math.log(hi)
    stop = math.log1p(rel_tol)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(math.exp(c)), fn(math.exp(d))
    while b - a > stop:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(math.exp(d))
    return math.exp(0.5 * (a + b))


def contrast_match(encoder, rho_t: float, c_ref: float,
                   display: DisplayModel, rho_ref: float = 5.0,
                   luminance: float = 10.0, n_grid: int = 32,
                   rel_tol: float = 1e-3, c_min: float = 1e-4,
                   normalized: bool = False) -> MatchResult:
    """Contrast on a test grating that feature-matches the reference.

    Minimizes (S_ac(F(rho_t, c), U) - S_ac(F(rho_ref, c_ref), U))^2 over
    c, where U is the uniform field's features: a 32-point log grid over
    [c_min, gamut limit] picks the bracket, golden-section refines it to
    1e-3 relative.  status is 'boundary' when the coarse optimum sits on
    a grid edge and 'non-monotone-fallback' when several grid points tie
    (smallest contrast wins).  normalized=True divides each S_ac by the
    reference's own S_ac before differencing; off by default.
    """
    if c_ref <= 0:
        raise ValueError("reference contrast must be positive")
    c_max = gamut_limit("ach", luminance, display)
    if not (0 < c_min < c_max):
        raise ValueError(f"empty search range [{c_min:.6g}, {c_max:.6g}]")
    f_uniform = _encode_features(
        encoder, uniform_field(luminance, display), display)

    def angle(rho: float, c: float) -> float:
        img = synthesize(GratingSpec(rho, luminance, c), display)
        return s_ac(_encode_features(encoder, img, display), f_uniform)

    target = angle(rho_ref, c_ref)
    scale = target if (normalized and target > 0) else 1.0

    def objective(c: float) -> float:
        return ((angle(rho_t, c) - target) / scale) ** 2

    grid = np.geomspace(c_min, c_max, n_grid)
    values = np.array([objective(float(c)) for c in grid])
    best = int(np.argmin(values))
    ties = np.flatnonzero(values == values[best])
    status = "converged"
    if ties.size > 1:
        status = "non-monotone-fallback"
        best = int(ties[0])
    if best == 0 or best == n_grid - 1:
        return MatchResult(rho_t, c_ref, float(grid[best]), "boundary",
                           float(values[best]), target)
    c_match = _golden_refine(objective, float(grid[best - 1]),
                             float(grid[best + 1]), rel_tol)
    return MatchResult(rho_t, c_ref, float(c_match), status,
                       float(objective(c_match)), target)


def match_curves(encoder, human_curves: Sequence[GroundTruthCurve],
                 display: DisplayModel, rho_ref: float = 5.0,
                 luminance: float = 10.0, normalized: bool = False,
                 **solver_kwargs) -> dict:
    """Solve the matching problem on every human curve's lattice.

    Returns {c_ref: list[MatchResult]} with one result per test frequency
    in the corresponding human curve.
    """
    out: dict = {}
    for curve in human_curves:
        if curve.y_axis != "matched_contrast":
            raise ValueError(
                f"matching needs matched_contrast curves, got "
                f"{curve.y_axis!r}")
        if "c_ref" not in curve.extra:
            raise ValueError("matching curve lacks c_ref metadata")
        c_ref = float(curve.extra["c_ref"])
        out[c_ref] = [
            contrast_match(encoder, float(rho), c_ref, display,
                           rho_ref=rho_ref, luminance=luminance,
                           normalized=normalized, **solver_kwargs)
            for rho in curve.x]
    return out


def matching_rmse(model: dict, human_curves: Sequence[GroundTruthCurve]) -> float:
    """RMSE between model and human matched contrasts in log10 domain.

    Model and human data must share the (rho_t, c_ref) lattice; missing
    points are an error listing what is absent.
    """
    errors = []
    missing = []
    for curve in human_curves:
        c_ref = float(curve.extra["c_ref"])
        results = model.get(c_ref)
        if results is None:
            missing.append(f"c_ref={c_ref:.6g} (whole curve)")
            continue
        by_rho = {r.rho_t: r for r in results}
        for rho, y_human in zip(curve.x, curve.y):
            r = by_rho.get(float(rho))
            if r is None:
                missing.append(f"(rho={rho:.6g}, c_ref={c_ref:.6g})")
                continue
            errors.append(math.log10(r.c_match) - math.log10(y_human))
    if missing:
        raise ValueError("model curve is missing points: "
                         + ", ".join(missing))
    if not errors:
        raise ValueError("no shared points between model and human curves")
    return float(np.sqrt(np.mean(np.square(errors))))


# --------------------------------------------------------------------------
# Dense contour grids (for plots and cheap re-scoring)


@dataclass(frozen=True, eq=False)
class ContourGrid:
    test_id: str
    encoder_id: str
    x_values: np.ndarray
    contrast_values: np.ndarray
    s_ac: np.ndarray             # shape (len(contrast_values), len(x_values))
    skips: tuple                 # (j, i, reason)


def contour_grid(encoder, test_id: str, display: DisplayModel,
                 n_x: int = 20, n_y: int = 20,
                 noise_seeds: int = DEFAULT_NOISE_SEEDS,
                 seed_base: int = 0, parallel: int = 1,
                 contrast_values: Optional[np.ndarray] = None) -> ContourGrid:
    """Dense S_ac lattice over the tabulated condition/contrast ranges.

    Rows follow the contrast axis, columns the condition axis.  Skipped
    (non-displayable) cells hold NaN and are listed with reasons.  Noise
    stimuli average over noise_seeds realizations, like alignment.
    """
    defn = TESTS[resolve_test_id(test_id)]
    if defn.kind == "matching":
        raise ValueError("matching has no contour grid; use match_curves")
    suite = stimuli.build_test_suite(test_id, display, n_x, n_y,
                                     seed_base=seed_base)
    xs = suite.x_values
    cs = (np.asarray(contrast_values, dtype=np.float64)
          if contrast_values is not None else suite.contrast_values)
    is_noise = (defn.stimulus == "noise") or (defn.mask_band is not None)
    n_seeds = noise_seeds if is_noise else 0
    plan_points = []
    for j, x in enumerate(xs):
        for i, c in enumerate(cs):
            seeds = tuple(stable_seed(seed_base, defn.test_id, j, i, k)
                          for k in range(n_seeds))
            if defn.kind == "detection":
                spec, _ = stimuli.detection_point(defn, float(x), float(c),
                                                  seeds[0] if seeds else 0,
                                                  display)
            else:
                spec = stimuli.masking_point(defn, float(x), float(c),
                                             seeds[0] if seeds else 0)
            plan_points.append(PlannedPoint(j, i, float(x), float(c), seeds,
                                            stimuli.skip_reason(spec,
                                                                display)))
    plan = GridPlan(defn.test_id, defn.kind, xs, np.full(len(xs), np.nan),
                    cs, tuple(plan_points), "contour")
    samples = _evaluate_plan(encoder, plan, display, parallel)
    matrix = np.full((len(cs), len(xs)), np.nan)
    skips = []
    for s in samples:
        if s.skip is None:
            matrix[s.i, s.j] = s.s_ac
        else:
            skips.append((s.j, s.i, s.skip))
    return ContourGrid(defn.test_id, encoder.encoder_id, xs, cs, matrix,
                       tuple(skips))
