"""Spectral descriptor blocks checked against analytic oracles."""

import numpy as np
import pytest

from lesionfuse.core import N_BANDS, WAVELENGTHS, SpectralCube
from lesionfuse.spectral import (
    HB_DIM,
    SHAPE_DIM,
    _HB_DIFFS,
    _HB_PAIRS,
    _ndi,
    band_pixel_stds,
    hb_features,
    spectral_shape_features,
    window_curvature,
    window_slope,
)


def _flat_cube(spectrum, h=4, w=4):
    """Every pixel carries the same spectrum; means are then exact."""
    s32 = np.asarray(spectrum, dtype=np.float32)
    data = np.broadcast_to(s32[:, None, None], (N_BANDS, h, w)).copy()
    return SpectralCube(data)


def _interp(s, wavelength):
    return float(np.interp(wavelength, WAVELENGTHS, s))


def test_hb_features_on_linear_spectrum():
    spectrum = 0.2 + 0.004 * np.arange(N_BANDS)
    cube = _flat_cube(spectrum)
    s = cube.data[:, 0, 0].astype(np.float64)  # float32-rounded truth
    out = hb_features(cube)
    assert out.shape == (HB_DIM,)

    np.testing.assert_allclose(out[0:9], s[12:21], atol=1e-12)
    np.testing.assert_allclose(out[9:18], 0.0, atol=1e-12)
    at = {w: _interp(s, w) for pair in _HB_PAIRS + _HB_DIFFS for w in pair}
    for i, (wa, wb) in enumerate(_HB_PAIRS):
        assert out[18 + i] == pytest.approx(at[wa] / at[wb], abs=1e-12)
        assert out[22 + i] == pytest.approx(
            (at[wa] - at[wb]) / (at[wa] + at[wb]), abs=1e-12
        )
    for i, (wa, wb) in enumerate(_HB_DIFFS):
        assert out[26 + i] == pytest.approx(at[wa] - at[wb], abs=1e-12)
    # a straight line has constant slope 0.004 per band = 4e-4 per nm;
    # float32 storage bends it by O(eps), so curvature is only near zero
    np.testing.assert_allclose(out[29:43], 4.0e-4, atol=1e-9)
    np.testing.assert_allclose(out[43:46], 0.0, atol=1e-9)


def test_window_fits_match_polyfit(rng):
    for _ in range(50):
        s = rng.random(N_BANDS)
        start = int(rng.integers(0, 26))
        got = window_slope(s, start, 5)
        x = WAVELENGTHS[start:start + 5]
        want = np.polyfit(x, s[start:start + 5], 1)[0]
        assert got == pytest.approx(want, abs=1e-10)

        center = int(rng.integers(2, 29))
        got_c = window_curvature(s, center, 2)
        x = WAVELENGTHS[center - 2:center + 3] - WAVELENGTHS[center]
        want_c = np.polyfit(x, s[center - 2:center + 3], 2)[0]
        assert got_c == pytest.approx(want_c, abs=1e-10)


def test_window_bounds_raise():
    s = np.zeros(N_BANDS)
    with pytest.raises(ValueError):
        window_slope(s, 28, 5)
    with pytest.raises(ValueError):
        window_curvature(s, 0, 2)


def test_curvature_recovers_quadratic_coefficient():
    a = 3.0e-5
    s = a * (WAVELENGTHS - 550.0) ** 2 / 100.0 + 0.3
    for center in (14, 17, 20):
        got = window_curvature(s, center, 2)
        assert got == pytest.approx(a / 100.0, rel=1e-9)


def test_band_pixel_stds_matches_numpy(rng):
    cube = SpectralCube(rng.random((N_BANDS, 5, 7)).astype(np.float32))
    got = band_pixel_stds(cube, np.arange(12, 21))
    want = [np.std(cube.data[k].astype(np.float64)) for k in range(12, 21)]
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_hb_and_shape_invariant_to_pixel_shuffles(rng):
    cube = SpectralCube(rng.random((N_BANDS, 6, 6)).astype(np.float32))
    shuffled = cube.data.copy()
    for k in range(N_BANDS):
        flat = shuffled[k].ravel()
        rng.shuffle(flat)
        shuffled[k] = flat.reshape(6, 6)
    other = SpectralCube(shuffled)
    np.testing.assert_allclose(
        hb_features(cube), hb_features(other), atol=1e-12
    )
    np.testing.assert_allclose(
        spectral_shape_features(cube), spectral_shape_features(other),
        atol=1e-12,
    )


def test_shape_features_analytic_case():
    spectrum = np.concatenate([
        np.linspace(0.6, 0.2, 16),   # falling to the min at band 15
        np.linspace(0.225, 0.575, 15),
    ])
    cube = _flat_cube(spectrum)
    s = cube.data[:, 0, 0].astype(np.float64)
    out = spectral_shape_features(cube)
    assert out.shape == (SHAPE_DIM,)
    assert out[0] == s.max()
    assert out[1] == s.min()
    assert out[2] == (WAVELENGTHS[np.argmax(s)] - 400.0) / 300.0
    assert out[3] == (WAVELENGTHS[np.argmin(s)] - 400.0) / 300.0
    assert out[4] == pytest.approx(s.max() - s.min(), abs=1e-12)
    assert out[5] == pytest.approx(s.mean(), abs=1e-12)
    assert out[6] == pytest.approx(s.std(), abs=1e-12)
    assert out[7] == pytest.approx(np.trapezoid(s) / 30.0, abs=1e-12)
    assert out[8] == pytest.approx(np.abs(np.diff(s)).sum(), abs=1e-12)
    for i, k in enumerate(range(2, 27, 2)):
        assert out[9 + i] == pytest.approx(
            (s[k + 1] - s[k - 1]) / 20.0, abs=1e-12
        )
    for i, k in enumerate(range(3, 28, 3)):
        assert out[22 + i] == pytest.approx(
            (s[k - 1] - 2 * s[k] + s[k + 1]) / 100.0, abs=1e-12
        )


def test_shape_extrema_tie_goes_to_lowest_band():
    spectrum = np.full(N_BANDS, 0.5)
    out = spectral_shape_features(_flat_cube(spectrum))
    assert out[2] == 0.0 and out[3] == 0.0


def test_ndi_antisymmetry_and_scale_invariance(rng):
    for _ in range(100):
        a, b = rng.uniform(0.01, 1.0, 2)
        assert _ndi(a, b) == -_ndi(b, a)
        c = float(rng.uniform(0.1, 50.0))
        assert _ndi(c * a, c * b) == pytest.approx(_ndi(a, b), abs=1e-12)
    assert _ndi(0.0, 0.0) == 0.0
