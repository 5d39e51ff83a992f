"""Feature extraction orchestration: manifest -> FeatureStore.

Per sample, loads the spectral cube and embedding referenced by the
manifest (paths resolved relative to the manifest directory) and
computes the selected modality vectors.  Extraction is pure per sample,
so a thread pool may be used; results are collected in manifest order
and are therefore independent of the thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from lesionfuse.core import Dataset, load_cube, load_embedding, luminance_plane
from lesionfuse.errors import DataError
from lesionfuse.fusion import GROUPS, demographics_matrix, normalize_groups
from lesionfuse.spectral import hb_features, spectral_shape_features
from lesionfuse.store import FeatureStore
from lesionfuse.texture import texture_features

_CUBE_GROUPS = ("hb", "tex", "shape")


def _extract_one(sample, base: Path, groups):
    """Modality vectors for one sample; errors name the sample."""
    out = {}
    try:
        if any(g in groups for g in _CUBE_GROUPS):
            cube = load_cube(base / sample.cube_path)
            if "hb" in groups:
                out["hb"] = hb_features(cube)
            if "tex" in groups:
                out["tex"] = texture_features(luminance_plane(cube))
            if "shape" in groups:
                out["shape"] = spectral_shape_features(cube)
        if "deep" in groups:
            out["deep"] = load_embedding(
                base / sample.embedding_path
            ).astype(np.float64)
    except (OSError, DataError) as exc:
        raise DataError(f"sample {sample.sample_id}: {exc}") from exc
    return out


def extract_features(dataset: Dataset, base_dir, groups=GROUPS,
                     threads: int = 1) -> FeatureStore:
    groups = normalize_groups(groups)
    base = Path(base_dir)
    samples = dataset.samples
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(lambda s: _extract_one(s, base, groups), samples)
            )
    else:
        rows = [_extract_one(s, base, groups) for s in samples]

    features = {}
    for g in groups:
        if g == "demo":
            features["demo"] = demographics_matrix(samples)
        else:
            features[g] = np.array([r[g] for r in rows], dtype=np.float64)
    return FeatureStore(
        sample_ids=tuple(s.sample_id for s in samples),
        patient_ids=tuple(s.patient_id for s in samples),
        labels=np.array([s.label for s in samples], dtype=np.int64),
        features=features,
        groups=groups,
    )


def extract_from_manifest(manifest_path, groups=GROUPS,
                          threads: int = 1) -> FeatureStore:
    from lesionfuse.core import read_manifest

    path = Path(manifest_path)
    dataset = read_manifest(path)
    return extract_features(dataset, path.parent, groups, threads)
