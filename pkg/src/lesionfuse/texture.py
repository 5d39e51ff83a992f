"""Texture features on the luminance plane: GLCM, LBP, Gabor.

The fixed 58-slot layout is 24 co-occurrence statistics (6 per offset,
offset-major), a 10-bin rotation-invariant uniform LBP histogram, and 24
Gabor bank responses (4 orientations x 3 wavelengths x 2 statistics).
Pixel-level loops live in the kernel backend; everything here is layout,
normalization and reductions shared by both backends.
"""

import math

import numpy as np

from lesionfuse import _kernels
from lesionfuse.errors import DataError

TEXTURE_DIM = 58

GLCM_LEVELS = 8
GLCM_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))

GABOR_ORIENTATIONS_DEG = (0.0, 45.0, 90.0, 135.0)
GABOR_WAVELENGTHS = (4.0, 8.0, 16.0)

_QUANT_EPS = 1e-9
_LEVEL_GRID = np.arange(GLCM_LEVELS, dtype=np.float64)


def quantize_levels(gray) -> np.ndarray:
    """Map [0,1] gray values onto integer levels 0..7."""
    g = np.asarray(gray, dtype=np.float64)
    clipped = np.minimum(g, 1.0 - _QUANT_EPS)
    return np.floor(clipped * GLCM_LEVELS).astype(np.int64)


def glcm(gray, offset) -> np.ndarray:
    """Symmetric normalized co-occurrence matrix for one pixel offset."""
    q = quantize_levels(gray)
    counts = _kernels.glcm_counts(q, offset[0], offset[1])
    total = counts.sum()
    if total == 0.0:
        raise DataError(f"no valid pixel pairs for offset {offset}")
    return counts / total


def glcm_stats(P) -> np.ndarray:
    """Six scalar statistics of a normalized co-occurrence matrix.

    Order: contrast, dissimilarity, homogeneity, energy, correlation,
    entropy (natural log).  Correlation is 0 when either marginal std
    falls below 1e-12.
    """
    i = _LEVEL_GRID[:, None]
    j = _LEVEL_GRID[None, :]
    diff = i - j
    contrast = float((diff * diff * P).sum())
    dissimilarity = float((np.abs(diff) * P).sum())
    homogeneity = float((P / (1.0 + diff * diff)).sum())
    energy = float((P * P).sum())
    p_i = P.sum(axis=1)
    p_j = P.sum(axis=0)
    mu_i = float((_LEVEL_GRID * p_i).sum())
    mu_j = float((_LEVEL_GRID * p_j).sum())
    var_i = float(((_LEVEL_GRID - mu_i) ** 2 * p_i).sum())
    var_j = float(((_LEVEL_GRID - mu_j) ** 2 * p_j).sum())
    sig_i = math.sqrt(var_i)
    sig_j = math.sqrt(var_j)
    if sig_i < 1e-12 or sig_j < 1e-12:
        correlation = 0.0
    else:
        correlation = float(
            (((i - mu_i) * (j - mu_j) * P).sum()) / (sig_i * sig_j)
        )
    nz = P[P > 0.0]
    entropy = float(-(nz * np.log(nz)).sum())
    return np.array(
        [contrast, dissimilarity, homogeneity, energy, correlation, entropy]
    )


def lbp_riu2_hist(gray) -> np.ndarray:
    """Normalized 10-bin riu2 LBP histogram (P=8, R=1) over interior pixels."""
    g = np.asarray(gray, dtype=np.float64)
    if g.shape[0] < 3 or g.shape[1] < 3:
        raise DataError("image must be at least 3x3 for LBP")
    counts = _kernels.lbp_counts(g)
    return counts / counts.sum()


def gabor_kernel(theta_deg, wavelength) -> np.ndarray:
    """Real zero-phase Gabor kernel, isotropic envelope, mean-subtracted.

    sigma = wavelength / 2 and half-size = ceil(2 sigma), so the three
    bank wavelengths {4, 8, 16} give 9x9, 17x17 and 33x33 kernels.
    """
    sigma = 0.5 * wavelength
    half = math.ceil(2.0 * sigma)
    theta = math.radians(theta_deg)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    dy = np.arange(-half, half + 1, dtype=np.float64)[:, None]
    dx = np.arange(-half, half + 1, dtype=np.float64)[None, :]
    rotated = dx * cos_t + dy * sin_t
    envelope = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    kern = envelope * np.cos(2.0 * math.pi * rotated / wavelength)
    return kern - kern.mean()


def _reflect_indices(n, pad):
    """Index map for reflect padding of any width (period 2n-2 bounce)."""
    if n == 1:
        return np.zeros(2 * pad + 1, dtype=np.int64)
    idx = np.arange(-pad, n + pad)
    period = 2 * n - 2
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


def reflect_pad(image, pad) -> np.ndarray:
    rows = _reflect_indices(image.shape[0], pad)
    cols = _reflect_indices(image.shape[1], pad)
    return image[np.ix_(rows, cols)]


def gabor_features(gray) -> np.ndarray:
    """24 Gabor responses: per filter (mean |response|, population std).

    Filters are orientation-major then wavelength.  Kernels are DC-free,
    so adding a constant to the image leaves all slots unchanged.
    """
    g = np.asarray(gray, dtype=np.float64)
    out = np.empty(24, dtype=np.float64)
    slot = 0
    for theta in GABOR_ORIENTATIONS_DEG:
        for wavelength in GABOR_WAVELENGTHS:
            kern = gabor_kernel(theta, wavelength)
            half = kern.shape[0] // 2
            padded = reflect_pad(g, half)
            resp = _kernels.convolve_valid(padded, kern)
            out[slot] = np.abs(resp).mean()
            out[slot + 1] = resp.std()
            slot += 2
    return out


def texture_features(gray) -> np.ndarray:
    """58-dim texture vector: GLCM block, LBP histogram, Gabor block."""
    g = np.asarray(gray, dtype=np.float64)
    parts = [glcm_stats(glcm(g, off)) for off in GLCM_OFFSETS]
    parts.append(lbp_riu2_hist(g))
    parts.append(gabor_features(g))
    return np.concatenate(parts)
