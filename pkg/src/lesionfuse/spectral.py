"""Spectral biomarker features from 31-band reflectance cubes.

Two fixed-layout vectors per cube: a 46-dim haemoglobin-sensitive block
built around the 520-600 nm absorption region, and a 31-dim global
spectral-shape block (extrema, area, derivatives).  Both depend only on
per-band pixel means/stds, so they are invariant to pixel permutations.
"""

import numpy as np

from lesionfuse.core import (
    N_BANDS,
    WAVELENGTHS,
    reflectance_at,
    roi_mean_spectrum,
)

HB_DIM = 46
SHAPE_DIM = 31

# Bands 12..20 cover 520..600 nm, the haemoglobin double-peak region.
_HB_BANDS = np.arange(12, 21)

# (numerator nm, denominator nm) for ratio and NDI slots.
_HB_PAIRS = ((545.0, 575.0), (560.0, 600.0), (540.0, 575.0), (550.0, 570.0))

# (a nm, b nm) for difference slots a - b.
_HB_DIFFS = ((560.0, 600.0), (545.0, 575.0), (540.0, 580.0))

_RATIO_FLOOR = 1e-12

_SLOPE_STARTS = tuple(range(0, 28, 2))  # fourteen 5-band windows
_CURV_CENTERS = (14, 17, 20)  # 540, 570, 600 nm, halfwidth 2


def window_slope(spectrum, start_band, length):
    """Least-squares slope (per nm) of the spectrum over a band window."""
    if length < 2 or start_band < 0 or start_band + length > N_BANDS:
        raise ValueError(
            f"slope window [{start_band}, {start_band + length}) out of range"
        )
    y = np.asarray(spectrum, dtype=np.float64)[
        start_band:start_band + length
    ]
    x = WAVELENGTHS[start_band:start_band + length]
    xc = x - x.mean()
    return float((xc * y).sum() / (xc * xc).sum())


def window_curvature(spectrum, center_band, halfwidth):
    """Quadratic coefficient (per nm^2) of a least-squares parabola.

    Fitted over bands center +- halfwidth with x = wavelength offset from
    the center band.  The grid is symmetric, so the closed-form normal
    equations reduce to a = (n*Sx2y - Sx2*Sy) / (n*Sx4 - Sx2^2).
    """
    if halfwidth < 1:
        raise ValueError("halfwidth must be >= 1")
    lo = center_band - halfwidth
    hi = center_band + halfwidth
    if lo < 0 or hi >= N_BANDS:
        raise ValueError(
            f"curvature window [{lo}, {hi}] out of range"
        )
    y = np.asarray(spectrum, dtype=np.float64)[lo:hi + 1]
    x = WAVELENGTHS[lo:hi + 1] - WAVELENGTHS[center_band]
    n = x.shape[0]
    x2 = x * x
    sx2 = x2.sum()
    sx4 = (x2 * x2).sum()
    sy = y.sum()
    sx2y = (x2 * y).sum()
    return float((n * sx2y - sx2 * sy) / (n * sx4 - sx2 * sx2))


def band_pixel_stds(cube, bands):
    """Population std over pixels for each requested band, float64."""
    return np.array(
        [float(np.std(cube.data[k], dtype=np.float64)) for k in bands]
    )


def _ratio(num, den):
    return num / max(den, _RATIO_FLOOR)


def _ndi(a, b):
    s = a + b
    if s < _RATIO_FLOOR:
        return 0.0
    return (a - b) / s


def hb_features(cube) -> np.ndarray:
    """46-dim haemoglobin-region feature vector.

    Layout: 0-8 ROI-mean reflectance at 520..600 nm; 9-17 per-band pixel
    stds at the same bands; 18-21 ratios; 22-25 NDIs; 26-28 differences;
    29-42 window slopes (5-band windows starting at even bands 0..26);
    43-45 curvatures (halfwidth 2 at 540/570/600 nm).
    """
    spectrum = roi_mean_spectrum(cube)
    out = np.empty(HB_DIM, dtype=np.float64)
    out[0:9] = spectrum[_HB_BANDS]
    out[9:18] = band_pixel_stds(cube, _HB_BANDS)
    at = {
        w: reflectance_at(spectrum, w)
        for pair in _HB_PAIRS + _HB_DIFFS
        for w in pair
    }
    for i, (wa, wb) in enumerate(_HB_PAIRS):
        out[18 + i] = _ratio(at[wa], at[wb])
    for i, (wa, wb) in enumerate(_HB_PAIRS):
        out[22 + i] = _ndi(at[wa], at[wb])
    for i, (wa, wb) in enumerate(_HB_DIFFS):
        out[26 + i] = at[wa] - at[wb]
    for i, start in enumerate(_SLOPE_STARTS):
        out[29 + i] = window_slope(spectrum, start, 5)
    for i, center in enumerate(_CURV_CENTERS):
        out[43 + i] = window_curvature(spectrum, center, 2)
    return out


def spectral_shape_features(cube) -> np.ndarray:
    """31-dim spectral-shape vector from the ROI-mean spectrum.

    Layout: 0 max, 1 min, 2/3 normalized wavelengths of max/min (ties to
    the lowest band), 4 peak-to-valley, 5 mean, 6 population std, 7 area
    under the curve (trapezoid over normalized wavelength), 8 total
    variation, 9-21 central first differences (per nm) at even bands
    2..26, 22-30 second differences (per nm^2) at bands 3,6,...,27.
    """
    s = roi_mean_spectrum(cube)
    out = np.empty(SHAPE_DIM, dtype=np.float64)
    k_max = int(np.argmax(s))
    k_min = int(np.argmin(s))
    out[0] = s[k_max]
    out[1] = s[k_min]
    out[2] = (WAVELENGTHS[k_max] - 400.0) / 300.0
    out[3] = (WAVELENGTHS[k_min] - 400.0) / 300.0
    out[4] = s[k_max] - s[k_min]
    out[5] = s.mean()
    out[6] = s.std()
    out[7] = float(((s[:-1] + s[1:]) / 2.0).sum() / 30.0)
    out[8] = float(np.abs(np.diff(s)).sum())
    for i, k in enumerate(range(2, 27, 2)):
        out[9 + i] = (s[k + 1] - s[k - 1]) / 20.0
    for i, k in enumerate(range(3, 28, 3)):
        out[22 + i] = (s[k - 1] - 2.0 * s[k] + s[k + 1]) / 100.0
    return out
