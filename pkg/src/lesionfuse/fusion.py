"""Per-modality z-score normalization and fixed-order concatenation.

The fused vector is deep(768) | hb(46) | tex(58) | shape(31) | demo(5),
908 dims with group boundaries at {0, 768, 814, 872, 903}.  Statistics
are fitted on training rows only and reused verbatim on evaluation data;
demographic missing values are imputed from training medians/modes.
"""

from dataclasses import dataclass

import numpy as np

from lesionfuse.errors import DataError

GROUPS = ("deep", "hb", "tex", "shape", "demo")

GROUP_DIMS = {"deep": 768, "hb": 46, "tex": 58, "shape": 31, "demo": 5}

FUSED_DIM = sum(GROUP_DIMS.values())

STD_FLOOR = 1e-8

# Raw demographics column layout (sentinels: age NaN, binaries -1).
DEMO_COLUMNS = ("age", "sex", "smoking", "alcohol", "betel")


def demographics_matrix(samples) -> np.ndarray:
    """Raw (n, 5) demographics with sentinels, from SampleRecords."""
    return np.array(
        [[s.age, s.sex, s.smoking, s.alcohol, s.betel] for s in samples],
        dtype=np.float64,
    )


def normalize_groups(active):
    """Validate a group iterable and return it in canonical order."""
    chosen = set(active)
    unknown = chosen - set(GROUPS)
    if unknown:
        raise DataError(f"unknown feature groups: {sorted(unknown)}")
    if not chosen:
        raise DataError("at least one feature group must be active")
    return tuple(g for g in GROUPS if g in chosen)


def group_offsets(active):
    """Start offset of each active group in the fused vector."""
    active = normalize_groups(active)
    offsets = {}
    pos = 0
    for g in active:
        offsets[g] = pos
        pos += GROUP_DIMS[g]
    return offsets, pos


@dataclass(frozen=True)
class ModalityNormalizer:
    """Training statistics for z-scoring plus demographic imputation."""

    active: tuple
    means: dict
    stds: dict
    age_median: float
    binary_modes: tuple

    def transform_demo(self, raw: np.ndarray) -> np.ndarray:
        """Impute sentinels and scale age to [0, ~1.2] (years / 100)."""
        out = np.array(raw, dtype=np.float64)
        age = out[:, 0]
        age[np.isnan(age)] = self.age_median
        out[:, 0] = age / 100.0
        for col in range(1, 5):
            vals = out[:, col]
            vals[vals == -1] = self.binary_modes[col - 1]
        return out


def _impute_stats(demo_raw):
    ages = demo_raw[:, 0]
    observed = ages[~np.isnan(ages)]
    age_median = float(np.median(observed)) if observed.size else 50.0
    modes = []
    for col in range(1, 5):
        vals = demo_raw[:, col]
        ones = int((vals == 1).sum())
        zeros = int((vals == 0).sum())
        modes.append(1 if ones > zeros else 0)
    return age_median, tuple(modes)


def fit_normalizer(features, active=GROUPS) -> ModalityNormalizer:
    """Fit per-group means/stds (population, floored) on training rows.

    features: dict group -> (n, dim) matrix; the demo entry is raw
    demographics with sentinels.
    """
    active = normalize_groups(active)
    n = features[active[0]].shape[0]
    if n == 0:
        raise DataError("cannot fit normalizer on zero training rows")
    if "demo" in active:
        age_median, modes = _impute_stats(features["demo"])
    else:
        age_median, modes = 50.0, (0, 0, 0, 0)
    norm = ModalityNormalizer(
        active=active,
        means={},
        stds={},
        age_median=age_median,
        binary_modes=modes,
    )
    for g in active:
        mat = features[g]
        if mat.shape[1] != GROUP_DIMS[g]:
            raise DataError(f"modality dimension mismatch: {g}")
        if mat.shape[0] != n:
            raise DataError(f"modality row count mismatch: {g}")
        if g == "demo":
            mat = norm.transform_demo(mat)
        mean = mat.mean(axis=0)
        std = np.maximum(mat.std(axis=0), STD_FLOOR)
        norm.means[g] = mean
        norm.stds[g] = std
    return norm


def fuse_matrix(features, normalizer: ModalityNormalizer) -> np.ndarray:
    """Z-score each active modality and concatenate in fixed group order."""
    parts = []
    n = None
    for g in normalizer.active:
        if g not in features:
            raise DataError(f"missing feature group: {g}")
        mat = np.asarray(features[g], dtype=np.float64)
        if mat.ndim != 2 or mat.shape[1] != GROUP_DIMS[g]:
            raise DataError(f"modality dimension mismatch: {g}")
        if n is None:
            n = mat.shape[0]
        elif mat.shape[0] != n:
            raise DataError(f"modality row count mismatch: {g}")
        if g == "demo":
            mat = normalizer.transform_demo(mat)
        parts.append((mat - normalizer.means[g]) / normalizer.stds[g])
    fused = np.concatenate(parts, axis=1)
    if not np.isfinite(fused).all():
        raise DataError("fused features contain non-finite values")
    return fused


def fuse(sample_features, normalizer: ModalityNormalizer) -> np.ndarray:
    """Fuse a single sample (dict group -> vector) into one row."""
    mats = {
        g: np.asarray(v, dtype=np.float64).reshape(1, -1)
        for g, v in sample_features.items()
        if g in normalizer.active
    }
    return fuse_matrix(mats, normalizer)[0]


def normalizer_to_dict(norm: ModalityNormalizer) -> dict:
    return {
        "active": list(norm.active),
        "means": {g: norm.means[g].tolist() for g in norm.active},
        "stds": {g: norm.stds[g].tolist() for g in norm.active},
        "age_median": norm.age_median,
        "binary_modes": list(norm.binary_modes),
    }


def normalizer_from_dict(doc: dict) -> ModalityNormalizer:
    active = tuple(doc["active"])
    return ModalityNormalizer(
        active=active,
        means={g: np.array(doc["means"][g], dtype=np.float64) for g in active},
        stds={g: np.array(doc["stds"][g], dtype=np.float64) for g in active},
        age_median=float(doc["age_median"]),
        binary_modes=tuple(int(v) for v in doc["binary_modes"]),
    )
