"""Multimodal oral-lesion classification pipeline.

Feature extraction from hyperspectral cubes, deep embeddings and
demographics; four calibrated base learners stacked under a logistic
meta-learner with patient-wise posterior smoothing; patient-grouped
evaluation workflows; a synthetic cohort generator for end-to-end runs.
"""

from lesionfuse._kernels import BACKEND
from lesionfuse.config import PRESETS, default_config, load_config, resolve_config
from lesionfuse.core import (
    LABELS,
    load_cube,
    load_embedding,
    read_manifest,
    write_manifest,
)
from lesionfuse.ensemble import (
    MetaEnsembleModel,
    SmoothingConfig,
    patient_smooth,
    predict_meta_ensemble,
    train_meta_ensemble,
)
from lesionfuse.errors import (
    ConfigError,
    DataError,
    LeakageError,
    LesionFuseError,
    StoreError,
)
from lesionfuse.experiments import (
    evaluate_bundle,
    run_ablation,
    run_cv,
    run_holdout,
    train_bundle,
)
from lesionfuse.extract import extract_features, extract_from_manifest
from lesionfuse.store import (
    FeatureStore,
    load_bundle,
    read_feature_store,
    save_bundle,
    write_feature_store,
)
from lesionfuse.synth import SynthConfig, generate_cohort

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataError",
    "FeatureStore",
    "LABELS",
    "LeakageError",
    "LesionFuseError",
    "MetaEnsembleModel",
    "PRESETS",
    "SmoothingConfig",
    "StoreError",
    "SynthConfig",
    "default_config",
    "evaluate_bundle",
    "extract_features",
    "extract_from_manifest",
    "generate_cohort",
    "load_bundle",
    "load_config",
    "load_cube",
    "load_embedding",
    "patient_smooth",
    "predict_meta_ensemble",
    "read_feature_store",
    "read_manifest",
    "resolve_config",
    "run_ablation",
    "run_cv",
    "run_holdout",
    "save_bundle",
    "train_bundle",
    "train_meta_ensemble",
    "write_feature_store",
    "write_manifest",
    "__version__",
]
