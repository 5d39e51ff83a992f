"""Stacked meta-ensemble over four calibrated base learners.

Each base learner's calibrated posterior row is expanded with three
confidence features (max probability, top-two margin, Shannon entropy),
stacked into one 28-dim meta vector, and scored by a multinomial
logistic meta-classifier.  Posteriors can additionally be smoothed
toward the per-patient mean, iteratively, on the base outputs, the meta
outputs, or both.

Training keeps stacking leak-free: meta features come from grouped
out-of-fold base probabilities, isotonic calibrators are fitted on
those same out-of-fold scores, and only the base learners themselves
are refitted on the full training set afterwards.
"""

from dataclasses import dataclass

import numpy as np

from lesionfuse.errors import ConfigError, DataError
from lesionfuse.fusion import GROUPS, ModalityNormalizer, fit_normalizer, fuse_matrix
from lesionfuse.learners import (
    LEARNER_KINDS,
    IsotonicMap,
    LogisticModel,
    calibrate,
    fit_isotonic,
    oof_probabilities,
    train_extra_trees,
    train_gbdt,
    train_logreg,
)
from lesionfuse.metrics import validate_posteriors
from lesionfuse.splits import derive_seed

N_CLASSES = 4

# 4 posterior slots + 3 confidence slots per base learner
META_DIM = len(LEARNER_KINDS) * (N_CLASSES + 3)

SMOOTH_TARGETS = ("base", "meta", "both")


def confidence_features(posteriors) -> np.ndarray:
    """Per-row (max probability, top-two margin, entropy in nats).

    Accepts one row or a matrix; entropy uses 0 ln 0 := 0.
    """
    p = np.asarray(posteriors, dtype=np.float64)
    single = p.ndim == 1
    rows = validate_posteriors(p.reshape(1, -1) if single else p)
    top2 = np.partition(rows, N_CLASSES - 2, axis=1)[:, -2:]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0.0, rows * np.log(rows), 0.0)
    out = np.column_stack([
        rows.max(axis=1),
        top2[:, 1] - top2[:, 0],
        -terms.sum(axis=1),
    ])
    return out[0] if single else out


def assemble_meta_features(prob_blocks) -> np.ndarray:
    """Concatenate per-learner [posteriors | confidence] blocks.

    prob_blocks: one calibrated (n, 4) matrix per base learner, in
    canonical learner order.  Output is (n, 28), model-major.
    """
    if len(prob_blocks) != len(LEARNER_KINDS):
        raise ValueError(
            f"expected {len(LEARNER_KINDS)} probability blocks, "
            f"got {len(prob_blocks)}"
        )
    parts = []
    for block in prob_blocks:
        rows = validate_posteriors(block)
        parts.append(rows)
        parts.append(confidence_features(rows))
    return np.hstack(parts)


def patient_smooth(posteriors, patient_ids, alpha, iterations) -> np.ndarray:
    """Pull each row toward its patient's mean: p <- (1-a) p + a mean.

    Runs `iterations` synchronous passes; the group mean is recomputed
    from the current values each pass.  Group means are fixed points,
    so per-row deviations contract by exactly (1 - alpha) per pass.
    """
    p = validate_posteriors(posteriors).copy()
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"smoothing alpha must be in [0, 1], got {alpha}")
    if iterations < 0:
        raise ConfigError("smoothing iterations must be >= 0")
    if len(patient_ids) != p.shape[0]:
        raise DataError("patient id count does not match posterior rows")
    if alpha == 0.0 or iterations == 0 or p.shape[0] == 0:
        return p
    _, inverse = np.unique(np.asarray(patient_ids), return_inverse=True)
    counts = np.bincount(inverse).astype(np.float64)
    for _ in range(iterations):
        sums = np.zeros((counts.shape[0], N_CLASSES), dtype=np.float64)
        np.add.at(sums, inverse, p)
        means = sums / counts[:, None]
        p = (1.0 - alpha) * p + alpha * means[inverse]
    return p


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float = 0.3
    iterations: int = 3
    target: str = "meta"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(
                f"smoothing alpha must be in [0, 1], got {self.alpha}"
            )
        if self.iterations < 0:
            raise ConfigError("smoothing iterations must be >= 0")
        if self.target not in SMOOTH_TARGETS:
            raise ConfigError(
                f"smoothing target must be one of {SMOOTH_TARGETS}, "
                f"got {self.target!r}"
            )


@dataclass(frozen=True)
class MetaEnsembleModel:
    """Trained ensemble: normalizer, base learners, calibrators, meta head."""

    normalizer: ModalityNormalizer
    base_models: dict
    calibrators: dict
    meta: LogisticModel
    smoothing: SmoothingConfig


def _train_base(kind, X, y, seed, params):
    kwargs = dict(params.get(kind, {}))
    if kind == "logreg":
        return train_logreg(X, y, **kwargs)
    if kind == "extra_trees":
        return train_extra_trees(X, y, seed=seed, **kwargs)
    if kind == "gbdt_level":
        return train_gbdt(X, y, variant="level", **kwargs)
    if kind == "gbdt_leaf":
        return train_gbdt(X, y, variant="leaf", **kwargs)
    raise ConfigError(f"unknown learner kind: {kind}")


def _fit_calibrators(oof, y):
    return [
        fit_isotonic(oof[:, c], (y == c).astype(np.float64))
        for c in range(N_CLASSES)
    ]


def train_meta_ensemble(
    features,
    y,
    patient_ids,
    active=GROUPS,
    smoothing: SmoothingConfig | None = None,
    seed: int = 0,
    k: int = 3,
    learner_params=None,
) -> MetaEnsembleModel:
    """Full training pipeline.

    features: dict group -> (n, dim) raw feature matrix.
    Stacking uses patient-grouped stratified folds shared by all four
    learners; per-fold seeds derive from (seed, learner index, fold)
    and the final full-data refit from (seed, learner index, k).
    """
    if smoothing is None:
        smoothing = SmoothingConfig()
    params = learner_params or {}
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).size < 2:
        raise DataError("single-class input: need >= 2 classes to train")
    normalizer = fit_normalizer(features, active)
    X = fuse_matrix(features, normalizer)
    if X.shape[0] != len(patient_ids):
        raise DataError("patient id count does not match sample count")

    oof_blocks = []
    calibrators = {}
    for idx, kind in enumerate(LEARNER_KINDS):
        oof = oof_probabilities(
            X, y, patient_ids,
            lambda Xf, yf, s, _kind=kind: _train_base(_kind, Xf, yf, s, params),
            k=k,
            seed=seed,
            train_seeds=[derive_seed(seed, idx, f) for f in range(k)],
        )
        calibrators[kind] = _fit_calibrators(oof, y)
        cal = calibrate(oof, calibrators[kind])
        if smoothing.target in ("base", "both"):
            cal = patient_smooth(
                cal, patient_ids, smoothing.alpha, smoothing.iterations
            )
        oof_blocks.append(cal)

    meta_X = assemble_meta_features(oof_blocks)
    meta = train_logreg(meta_X, y, l2=1e-3)

    base_models = {
        kind: _train_base(kind, X, y, derive_seed(seed, idx, k), params)
        for idx, kind in enumerate(LEARNER_KINDS)
    }
    return MetaEnsembleModel(
        normalizer=normalizer,
        base_models=base_models,
        calibrators=calibrators,
        meta=meta,
        smoothing=smoothing,
    )


def predict_base_posteriors(model: MetaEnsembleModel, features) -> dict:
    """Calibrated, unsmoothed posteriors per base learner kind."""
    X = fuse_matrix(features, model.normalizer)
    return {
        kind: calibrate(
            model.base_models[kind].predict_proba(X), model.calibrators[kind]
        )
        for kind in LEARNER_KINDS
    }


def predict_meta_ensemble(model: MetaEnsembleModel, features, patient_ids):
    """Posteriors and labels for new samples.

    Smoothing at prediction time is transductive within each test
    patient's own rows only.  Returns (posteriors, labels).
    """
    X = fuse_matrix(features, model.normalizer)
    if X.shape[0] != len(patient_ids):
        raise DataError("patient id count does not match sample count")
    cfg = model.smoothing
    blocks = []
    for kind in LEARNER_KINDS:
        cal = calibrate(
            model.base_models[kind].predict_proba(X), model.calibrators[kind]
        )
        if cfg.target in ("base", "both"):
            cal = patient_smooth(cal, patient_ids, cfg.alpha, cfg.iterations)
        blocks.append(cal)
    meta_X = assemble_meta_features(blocks)
    posteriors = model.meta.predict_proba(meta_X)
    if cfg.target in ("meta", "both"):
        posteriors = patient_smooth(
            posteriors, patient_ids, cfg.alpha, cfg.iterations
        )
    labels = np.argmax(posteriors, axis=1)
    return posteriors, labels
