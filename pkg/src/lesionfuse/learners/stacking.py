"""Out-of-fold probability generation for leak-free stacking.

The training data is split into patient-grouped stratified folds; each
row's probabilities come from the model trained with that row's entire
patient held out.  Per-fold seeds derive from (seed, fold) so folds are
independent but reproducible.
"""

import numpy as np

from lesionfuse.errors import ConfigError, DataError, LeakageError
from lesionfuse.splits import (
    derive_seed,
    grouped_stratified_kfold,
)

N_CLASSES = 4


def fold_plan(patient_ids, y, k, seed) -> np.ndarray:
    """Per-sample fold assignment from patient-grouped stratification."""
    patient_labels = {}
    votes = {}
    for pid, label in zip(patient_ids, y):
        counts = votes.setdefault(pid, [0] * N_CLASSES)
        counts[int(label)] += 1
    for pid, counts in votes.items():
        patient_labels[pid] = int(np.argmax(counts))
    if len(patient_labels) < k:
        raise ConfigError(
            f"{len(patient_labels)} patients cannot fill {k} folds"
        )
    fold_of_patient = grouped_stratified_kfold(patient_labels, k, seed)
    return np.array(
        [fold_of_patient[pid] for pid in patient_ids], dtype=np.int64
    )


def oof_probabilities(
    X, y, patient_ids, train_fn, k=3, seed=0, train_seeds=None
) -> np.ndarray:
    """Probability matrix where row i is predicted by a model that never
    saw patient(i) during training.

    train_fn(X, y, seed) -> model with predict_proba.  Fold f trains with
    train_seeds[f] when given, else derive_seed(seed, fold).  The fold
    layout depends only on (patient_ids, y, k, seed), so different
    learners sharing a seed share folds.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if len(patient_ids) != n:
        raise DataError("patient id count does not match sample count")
    if train_seeds is not None and len(train_seeds) != k:
        raise ConfigError("train_seeds must supply one seed per fold")
    folds = fold_plan(patient_ids, y, k, seed)
    pids = np.array(patient_ids)
    out = np.full((n, N_CLASSES), np.nan, dtype=np.float64)
    for fold in range(k):
        test_mask = folds == fold
        train_mask = ~test_mask
        overlap = set(pids[train_mask]) & set(pids[test_mask])
        if overlap:
            raise LeakageError(
                f"patient leakage in stacking folds: {sorted(overlap)[:5]}"
            )
        fold_seed = (
            train_seeds[fold] if train_seeds is not None
            else derive_seed(seed, fold)
        )
        model = train_fn(X[train_mask], y[train_mask], fold_seed)
        out[test_mask] = model.predict_proba(X[test_mask])
    if np.isnan(out).any():
        raise AssertionError("out-of-fold matrix has unfilled rows")
    return out
