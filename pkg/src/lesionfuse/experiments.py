"""Training and evaluation workflows over a feature store.

All splits are patient-grouped and stratified by patient majority
label.  Every workflow computes a leakage audit (pairwise patient-set
intersection sizes) and aborts if any intersection is non-empty, echoes
the fully resolved config, and is deterministic given config + seed.

Base learners are always reported from their calibrated, unsmoothed
posteriors; the stacked ensemble is reported with its configured
smoothing.
"""

import json

import numpy as np

from lesionfuse.config import PRESETS, active_groups
from lesionfuse.core import LABELS
from lesionfuse.ensemble import (
    MetaEnsembleModel,
    SmoothingConfig,
    predict_base_posteriors,
    predict_meta_ensemble,
    train_meta_ensemble,
)
from lesionfuse.errors import ConfigError, DataError
from lesionfuse.fusion import GROUP_DIMS
from lesionfuse.learners import LEARNER_KINDS
from lesionfuse.metrics import compute_metrics
from lesionfuse.splits import (
    assert_no_patient_overlap,
    derive_seed,
    grouped_stratified_holdout,
    grouped_stratified_kfold,
)
from lesionfuse.store import FeatureStore

ENSEMBLE_KEY = "ensemble"
METRIC_COLUMNS = ("macro_f1", "accuracy", "macro_ap", "macro_auc")


def _patient_labels(store: FeatureStore) -> dict:
    votes = {}
    for pid, label in zip(store.patient_ids, store.labels):
        counts = votes.setdefault(pid, [0, 0, 0, 0])
        counts[int(label)] += 1
    return {pid: int(np.argmax(c)) for pid, c in votes.items()}


def _indices_for(store: FeatureStore, patients) -> np.ndarray:
    wanted = set(patients)
    return np.array(
        [i for i, p in enumerate(store.patient_ids) if p in wanted],
        dtype=np.int64,
    )


def _subset(store: FeatureStore, groups, idx):
    features = {g: store.features[g][idx] for g in groups}
    pids = [store.patient_ids[i] for i in idx]
    return features, store.labels[idx], pids


def _check_groups(store: FeatureStore, groups):
    missing = [g for g in groups if g not in store.groups]
    if missing:
        raise DataError(f"feature store lacks modality: {missing[0]}")


def _smoothing(cfg) -> SmoothingConfig:
    s = cfg["smoothing"]
    return SmoothingConfig(
        alpha=s["alpha"], iterations=s["iterations"], target=s["target"]
    )


def _train(store, cfg, groups, idx, seed) -> MetaEnsembleModel:
    features, y, pids = _subset(store, groups, idx)
    return train_meta_ensemble(
        features,
        y,
        pids,
        active=groups,
        smoothing=_smoothing(cfg),
        seed=seed,
        k=cfg["split"]["stack_folds"],
        learner_params=cfg["learners"],
    )


def _evaluate(model, store, groups, idx) -> dict:
    """Per-model metric reports plus ensemble prediction rows."""
    features, y, pids = _subset(store, groups, idx)
    posteriors, labels = predict_meta_ensemble(model, features, pids)
    models = {
        kind: compute_metrics(y, probs).to_dict()
        for kind, probs in predict_base_posteriors(model, features).items()
    }
    models[ENSEMBLE_KEY] = compute_metrics(y, posteriors).to_dict()
    predictions = [
        {
            "sample_id": store.sample_ids[i],
            "patient_id": store.patient_ids[i],
            "posteriors": [float(v) for v in posteriors[j]],
            "label": LABELS[int(labels[j])],
        }
        for j, i in enumerate(idx)
    ]
    return {"models": models, "predictions": predictions, "n_samples": len(idx)}


def train_bundle(store: FeatureStore, cfg: dict):
    """Train the ensemble on every sample in the store."""
    groups = active_groups(cfg)
    _check_groups(store, groups)
    idx = np.arange(len(store))
    model = _train(store, cfg, groups, idx, cfg["seed"])
    extra = {"config": cfg, "groups": list(groups)}
    return model, extra


def evaluate_bundle(model: MetaEnsembleModel, store: FeatureStore,
                    cfg: dict) -> dict:
    groups = model.normalizer.active
    _check_groups(store, groups)
    idx = np.arange(len(store))
    report = _evaluate(model, store, groups, idx)
    report.update({"workflow": "evaluate", "config": cfg,
                   "groups": list(groups)})
    return report


def run_holdout(store: FeatureStore, cfg: dict, groups=None) -> dict:
    """Grouped stratified holdout: train on development, score holdout."""
    if groups is None:
        groups = active_groups(cfg)
    _check_groups(store, groups)
    seed = cfg["seed"]
    labels = _patient_labels(store)
    holdout, development = grouped_stratified_holdout(
        labels, cfg["split"]["holdout_fraction"], seed
    )
    assert_no_patient_overlap(development, holdout)
    if not holdout:
        raise ConfigError("holdout fraction selected zero patients")
    dev_idx = _indices_for(store, development)
    test_idx = _indices_for(store, holdout)
    model = _train(store, cfg, groups, dev_idx, seed)
    report = _evaluate(model, store, groups, test_idx)
    report.update({
        "workflow": "holdout",
        "config": cfg,
        "groups": list(groups),
        "n_train": int(dev_idx.shape[0]),
        "split": {
            "holdout_patients": sorted(holdout),
            "development_patients": sorted(development),
        },
        "leakage_audit": {
            "holdout_vs_development": len(set(holdout) & set(development)),
        },
    })
    return report, model


def run_cv(store: FeatureStore, cfg: dict) -> dict:
    """Development k-fold CV plus the final holdout evaluation."""
    groups = active_groups(cfg)
    _check_groups(store, groups)
    seed = cfg["seed"]
    k = cfg["split"]["folds"]
    labels = _patient_labels(store)
    holdout, development = grouped_stratified_holdout(
        labels, cfg["split"]["holdout_fraction"], seed
    )
    dev_labels = {pid: labels[pid] for pid in development}
    fold_of = grouped_stratified_kfold(dev_labels, k, derive_seed(seed, 1))
    fold_patients = {
        f: sorted(p for p, ff in fold_of.items() if ff == f)
        for f in range(k)
    }

    audit = {"holdout_vs_development": len(set(holdout) & set(development))}
    pairwise = []
    for a in range(k):
        for b in range(a + 1, k):
            inter = len(set(fold_patients[a]) & set(fold_patients[b]))
            pairwise.append([a, b, inter])
    audit["fold_pairwise"] = pairwise
    audit["fold_vs_holdout"] = [
        len(set(fold_patients[f]) & set(holdout)) for f in range(k)
    ]
    if any(v for _, _, v in pairwise) or any(audit["fold_vs_holdout"]) \
            or audit["holdout_vs_development"]:
        from lesionfuse.errors import LeakageError

        raise LeakageError(f"split audit found overlap: {audit}")

    folds = []
    for f in range(k):
        test_p = fold_patients[f]
        train_p = [p for p in development if fold_of[p] != f]
        assert_no_patient_overlap(train_p, test_p)
        train_idx = _indices_for(store, train_p)
        test_idx = _indices_for(store, test_p)
        model = _train(store, cfg, groups, train_idx, derive_seed(seed, 2, f))
        entry = _evaluate(model, store, groups, test_idx)
        entry.pop("predictions")
        entry.update({
            "fold": f,
            "n_train": int(train_idx.shape[0]),
            "patients": test_p,
        })
        folds.append(entry)

    assert_no_patient_overlap(development, holdout)
    dev_idx = _indices_for(store, development)
    hold_idx = _indices_for(store, holdout)
    model = _train(store, cfg, groups, dev_idx, seed)
    hold_entry = _evaluate(model, store, groups, hold_idx)
    hold_entry.update({
        "n_train": int(dev_idx.shape[0]),
        "patients": sorted(holdout),
    })

    return {
        "workflow": "cv",
        "config": cfg,
        "groups": list(groups),
        "split": {
            "holdout_patients": sorted(holdout),
            "fold_patients": {str(f): fold_patients[f] for f in range(k)},
        },
        "leakage_audit": audit,
        "folds": folds,
        "holdout": hold_entry,
    }


def run_ablation(store: FeatureStore, cfg: dict, presets=None) -> dict:
    """One holdout cycle per feature-group preset, same split each time."""
    if presets is None:
        presets = [cfg["preset"]] if cfg["preset"] else list(PRESETS)
    rows = []
    for preset in presets:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset: {preset}")
        groups = PRESETS[preset]
        report, _ = run_holdout(store, cfg, groups=groups)
        metrics = report["models"][ENSEMBLE_KEY]
        rows.append({
            "preset": preset,
            "groups": list(groups),
            "fused_dim": int(sum(GROUP_DIMS[g] for g in groups)),
            "metrics": {c: metrics[c] for c in METRIC_COLUMNS},
        })
    return {"workflow": "ablate", "config": cfg, "rows": rows}


def write_report(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt_row(name, metrics) -> str:
    cells = "  ".join(f"{100 * metrics[c]:6.2f}" for c in METRIC_COLUMNS)
    return f"{name:<12} {cells}"


def format_models_table(models: dict) -> str:
    """Human rendering; metrics scaled to percentages."""
    header = f"{'model':<12} " + "  ".join(
        f"{c:>6}" for c in ("F1", "acc", "AP", "AUC")
    )
    lines = [header]
    for kind in (*LEARNER_KINDS, ENSEMBLE_KEY):
        if kind in models:
            lines.append(_fmt_row(kind, models[kind]))
    return "\n".join(lines)


def format_ablation_table(doc: dict) -> str:
    header = f"{'preset':<12} " + "  ".join(
        f"{c:>6}" for c in ("F1", "acc", "AP", "AUC")
    ) + "   dims"
    lines = [header]
    for row in doc["rows"]:
        lines.append(
            _fmt_row(row["preset"], row["metrics"]) + f"   {row['fused_dim']}"
        )
    return "\n".join(lines)


def ablation_csv(doc: dict) -> str:
    """Percentage-scaled CSV mirroring the printed table."""
    lines = ["preset,macro_f1,accuracy,pr_auc,auc_roc,fused_dim"]
    for row in doc["rows"]:
        m = row["metrics"]
        cells = ",".join(f"{100 * m[c]:.2f}" for c in METRIC_COLUMNS)
        lines.append(f"{row['preset']},{cells},{row['fused_dim']}")
    return "\n".join(lines) + "\n"
