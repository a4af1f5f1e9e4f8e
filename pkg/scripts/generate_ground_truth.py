#!/usr/bin/env python3
"""Regenerate the ground-truth CSV files under src/hvsbench/data.

The shipped curves are digitized stand-ins assembled from the published
psychophysics they cite: anchor values tabulated below, written out
verbatim (detection and masking) or expanded through a small parametric
constancy model (matching).  Running this script rewrites the data files
bit-identically; edit the tables here, never the CSVs.

Chromatic sensitivities are floored where the corresponding threshold
would leave the displayable range of the reference display (rg capped at
threshold 0.08, yv at 0.2); a dashed curve can only be digitized inside
the plotted contrast window, and stimuli past the gamut limit cannot be
rendered for scoring anyway.
"""

from __future__ import annotations

import math
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "src" / "hvsbench" / "data"

CSF_SOURCE = ("digitized stand-in after the spatio-chromatic CSF "
              "literature: Barten (1999); Wuerger, Ashraf & Mantiuk (2020); "
              "ModelFest (Watson & Ahumada 2005)")

# x = cpd, y = sensitivity (1/Michelson threshold), 1-deg Gabor, 100 cd/m^2
GABOR_ACH = [
    (0.5, 95.0), (0.7, 130.0), (1.0, 170.0), (1.5, 215.0), (2.0, 240.0),
    (3.0, 250.0), (4.0, 245.0), (6.0, 205.0), (8.0, 160.0), (12.0, 90.0),
    (16.0, 48.0), (24.0, 16.0), (32.0, 7.0),
]

# x = cpd, y = sensitivity (1/RMS threshold), one-octave noise, 100 cd/m^2
NOISE_ACH = [
    (0.5, 110.0), (0.7, 150.0), (1.0, 185.0), (1.5, 225.0), (2.0, 240.0),
    (3.0, 245.0), (4.0, 235.0), (6.0, 190.0), (8.0, 140.0), (12.0, 75.0),
    (16.0, 38.0), (24.0, 12.0), (32.0, 5.0),
]

# x = cpd, y = sensitivity in pooled cone-contrast units (see colorimetry);
# low-pass, floored at threshold 0.08 past the chromatic acuity limit
GABOR_RG = [
    (0.5, 95.0), (0.7, 93.0), (1.0, 88.0), (1.5, 80.0), (2.0, 72.0),
    (3.0, 56.0), (4.0, 42.0), (6.0, 26.0), (8.0, 17.5), (12.0, 14.0),
    (16.0, 13.0), (24.0, 12.5), (32.0, 12.5),
]

# x = cpd, y = sensitivity in S-cone contrast units; floored at 0.2
GABOR_YV = [
    (0.5, 21.0), (0.7, 20.5), (1.0, 19.5), (1.5, 18.0), (2.0, 16.5),
    (3.0, 13.5), (4.0, 11.0), (6.0, 8.0), (8.0, 6.5), (12.0, 5.5),
    (16.0, 5.0), (24.0, 5.0), (32.0, 5.0),
]

# x = cd/m^2, y = sensitivity; 2 cpd 1-deg Gabor across adaptation levels
LUMINANCE_ACH = [
    (0.1, 14.0), (0.3, 30.0), (1.0, 55.0), (3.0, 90.0), (10.0, 135.0),
    (30.0, 175.0), (100.0, 215.0), (200.0, 235.0),
]

# x = envelope sigma in degrees, y = sensitivity; 8 cpd Gabor, 100 cd/m^2
AREA_ACH = [
    (0.1, 28.0), (0.15, 40.0), (0.25, 62.0), (0.4, 88.0), (0.6, 110.0),
    (0.8, 122.0), (1.0, 130.0),
]

# x = mask contrast, y = test threshold contrast; 2 cpd Gabor on a 2 cpd
# grating, 32 cd/m^2: facilitation dip near the unmasked threshold, then
# a compressive rise
MASKING_COHERENT = [
    (0.005, 0.0085), (0.01, 0.0065), (0.02, 0.0075), (0.05, 0.013),
    (0.1, 0.021), (0.2, 0.034), (0.35, 0.048), (0.5, 0.062),
]

# x = mask contrast, y = test threshold contrast; 1.2 cpd Gabor on 0-12 cpd
# noise, 37 cd/m^2: no facilitation dip
MASKING_INCOHERENT = [
    (0.005, 0.012), (0.01, 0.012), (0.02, 0.013), (0.05, 0.018),
    (0.1, 0.026), (0.2, 0.038), (0.35, 0.052), (0.5, 0.065),
]

# Grating sensitivity at the matching background (10 cd/m^2, full field);
# anchors double as the test-frequency lattice of the matching data.
MATCHING_CSF10 = [
    (0.25, 28.0), (0.5, 55.0), (1.0, 95.0), (2.0, 135.0), (5.0, 150.0),
    (7.0, 135.0), (10.0, 100.0), (15.0, 55.0), (20.0, 28.0), (25.0, 14.0),
]

MATCHING_REFERENCE_CONTRASTS = [0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32,
                                0.629]

# Weight of the threshold-following regime: near-threshold matches track
# the CSF, high-contrast matches approach physical equality (constancy).
CONSTANCY_PIVOT = 0.02
CONSTANCY_POWER = 0.8


def constancy_weight(c_ref: float) -> float:
    return 1.0 / (1.0 + (c_ref / CONSTANCY_PIVOT) ** CONSTANCY_POWER)


def matched_contrast(rho: float, c_ref: float) -> float:
    s_ref = dict(MATCHING_CSF10)[5.0]
    s_rho = dict(MATCHING_CSF10)[rho]
    ratio = s_ref / s_rho          # = T(rho) / T(5)
    return c_ref * ratio ** constancy_weight(c_ref)


def fmt(v: float) -> str:
    return f"{v:.6g}"


def write_curve(name: str, test_id: str, x_axis: str, y_axis: str,
                source: str, rows, extra: dict | None = None) -> None:
    lines = [f"# test_id={test_id}", f"# x_axis={x_axis}",
             f"# y_axis={y_axis}", f"# source={source}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("x,y")
    lines.extend(f"{fmt(x)},{fmt(y)}" for x, y in rows)
    path = DATA / name
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path} ({len(rows)} points)")


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    write_curve("csf_spatial_freq_gabor_ach.csv", "spatial-freq-gabor-ach",
                "cpd", "sensitivity", CSF_SOURCE, GABOR_ACH)
    write_curve("csf_spatial_freq_noise_ach.csv", "spatial-freq-noise-ach",
                "cpd", "sensitivity",
                CSF_SOURCE + "; noise-band detection variant", NOISE_ACH)
    write_curve("csf_spatial_freq_gabor_rg.csv", "spatial-freq-gabor-rg",
                "cpd", "sensitivity",
                CSF_SOURCE + "; Mullen (1985); floored at the rg gamut cap",
                GABOR_RG)
    write_curve("csf_spatial_freq_gabor_yv.csv", "spatial-freq-gabor-yv",
                "cpd", "sensitivity",
                CSF_SOURCE + "; Mullen (1985); floored at the yv plot cap",
                GABOR_YV)
    write_curve("csf_luminance_gabor_ach.csv", "luminance-gabor-ach",
                "cd_per_m2", "sensitivity", CSF_SOURCE, LUMINANCE_ACH)
    write_curve("csf_area_gabor_ach.csv", "area-gabor-ach", "degrees",
                "sensitivity", CSF_SOURCE, AREA_ACH)
    write_curve("masking_phase_coherent.csv", "masking-phase-coherent",
                "mask_contrast", "threshold_contrast",
                "digitized after Foley (1994), 2 cpd on 32 cd/m^2",
                MASKING_COHERENT)
    write_curve("masking_phase_incoherent.csv", "masking-phase-incoherent",
                "mask_contrast", "threshold_contrast",
                "digitized after Gegenfurtner & Kiper (1992) noise masking",
                MASKING_INCOHERENT)
    for c_ref in MATCHING_REFERENCE_CONTRASTS:
        stem = f"matching_c{round(c_ref * 1000):04d}"
        rows = [(rho, matched_contrast(rho, c_ref))
                for rho, _ in MATCHING_CSF10]
        write_curve(f"{stem}.csv", "contrast-matching", "cpd",
                    "matched_contrast",
                    "synthesized from the contrast-constancy description of "
                    "Georgeson & Sullivan (1975): threshold-following near "
                    "detection, veridical matching at high contrast",
                    rows, extra={"c_ref": fmt(c_ref)})


if __name__ == "__main__":
    main()
