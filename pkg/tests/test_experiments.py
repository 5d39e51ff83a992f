"""Workflow harness: holdout, cross-validation, ablation, reports."""

import json

import numpy as np
import pytest

import lesionfuse.experiments as experiments
from lesionfuse.core import LABELS
from lesionfuse.errors import ConfigError, DataError, LeakageError
from lesionfuse.experiments import (
    ENSEMBLE_KEY,
    ablation_csv,
    evaluate_bundle,
    format_ablation_table,
    format_models_table,
    run_ablation,
    run_cv,
    run_holdout,
    train_bundle,
    write_report,
)
from lesionfuse.extract import extract_from_manifest
from lesionfuse.learners import LEARNER_KINDS
from lesionfuse.store import load_bundle, save_bundle

MODEL_KEYS = set(LEARNER_KINDS) | {ENSEMBLE_KEY}


def _assert_metric_block(models):
    assert set(models) == MODEL_KEYS
    for entry in models.values():
        for col in ("macro_f1", "accuracy", "macro_ap", "macro_auc"):
            assert 0.0 <= entry[col] <= 1.0


def test_run_holdout_report(tiny_store, fast_cfg):
    report, model = run_holdout(tiny_store, fast_cfg)
    assert report["workflow"] == "holdout"
    assert report["config"] == fast_cfg
    assert report["groups"] == list(tiny_store.groups)
    _assert_metric_block(report["models"])

    split = report["split"]
    hold = set(split["holdout_patients"])
    dev = set(split["development_patients"])
    assert hold and dev and not hold & dev
    assert hold | dev == set(tiny_store.patient_ids)
    assert report["leakage_audit"]["holdout_vs_development"] == 0

    assert report["n_samples"] == len(report["predictions"])
    for row in report["predictions"]:
        assert row["patient_id"] in hold
        assert row["label"] in LABELS
        assert sum(row["posteriors"]) == pytest.approx(1.0, abs=1e-9)
    n_hold = sum(p in hold for p in tiny_store.patient_ids)
    assert report["n_samples"] == n_hold
    assert report["n_train"] == len(tiny_store) - n_hold
    assert model.normalizer.active == tiny_store.groups


def test_run_holdout_deterministic(tiny_store, fast_cfg):
    from lesionfuse.store import bundle_to_bytes

    r1, m1 = run_holdout(tiny_store, fast_cfg)
    r2, m2 = run_holdout(tiny_store, fast_cfg)
    assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)
    assert bundle_to_bytes(m1) == bundle_to_bytes(m2)


def test_run_holdout_group_override_and_missing_modality(
    tiny_store, fast_cfg, tiny_cohort
):
    report, _ = run_holdout(tiny_store, fast_cfg, groups=("hb", "demo"))
    assert report["groups"] == ["hb", "demo"]

    demo_only = extract_from_manifest(tiny_cohort, groups=("demo",))
    with pytest.raises(DataError, match="lacks modality"):
        run_holdout(demo_only, fast_cfg)


def test_run_holdout_zero_fraction_rejected(tiny_store, fast_cfg):
    cfg = json.loads(json.dumps(fast_cfg))
    cfg["split"]["holdout_fraction"] = 0.0
    with pytest.raises(ConfigError, match="zero patients"):
        run_holdout(tiny_store, cfg)


def test_run_cv_structure(tiny_store, fast_cfg):
    doc = run_cv(tiny_store, fast_cfg)
    assert doc["workflow"] == "cv"
    k = fast_cfg["split"]["folds"]
    assert len(doc["folds"]) == k

    hold = set(doc["split"]["holdout_patients"])
    fold_sets = [set(doc["split"]["fold_patients"][str(f)]) for f in range(k)]
    dev = set().union(*fold_sets)
    assert hold | dev == set(tiny_store.patient_ids)
    for a in range(k):
        assert not fold_sets[a] & hold
        for b in range(a + 1, k):
            assert not fold_sets[a] & fold_sets[b]

    audit = doc["leakage_audit"]
    assert audit["holdout_vs_development"] == 0
    assert all(v == 0 for _, _, v in audit["fold_pairwise"])
    assert audit["fold_vs_holdout"] == [0] * k

    for f, entry in enumerate(doc["folds"]):
        assert entry["fold"] == f
        assert "predictions" not in entry
        assert entry["n_samples"] == sum(
            p in fold_sets[f] for p in tiny_store.patient_ids
        )
        _assert_metric_block(entry["models"])
    _assert_metric_block(doc["holdout"]["models"])
    assert set(doc["holdout"]["patients"]) == hold


def test_run_cv_aborts_on_overlapping_split(tiny_store, fast_cfg, monkeypatch):
    real = experiments.grouped_stratified_holdout

    def leaky(labels, fraction, seed):
        holdout, development = real(labels, fraction, seed)
        return holdout, set(development) | {next(iter(holdout))}

    monkeypatch.setattr(experiments, "grouped_stratified_holdout", leaky)
    with pytest.raises(LeakageError, match="overlap"):
        run_cv(tiny_store, fast_cfg)


def test_run_ablation_rows(tiny_store, fast_cfg):
    doc = run_ablation(tiny_store, fast_cfg)
    assert [r["preset"] for r in doc["rows"]] == ["M1", "M2", "M3", "M4", "M5"]
    assert [r["fused_dim"] for r in doc["rows"]] == [768, 773, 819, 877, 908]
    for row in doc["rows"]:
        assert set(row["metrics"]) == {
            "macro_f1", "accuracy", "macro_ap", "macro_auc"
        }

    two = run_ablation(tiny_store, fast_cfg, presets=["M5", "M1"])
    assert [r["preset"] for r in two["rows"]] == ["M5", "M1"]
    with pytest.raises(ConfigError, match="unknown preset"):
        run_ablation(tiny_store, fast_cfg, presets=["M7"])


def test_preset_in_config_drives_ablation(tiny_store, fast_cfg):
    cfg = json.loads(json.dumps(fast_cfg))
    cfg["preset"] = "M2"
    doc = run_ablation(tiny_store, cfg)
    assert [r["preset"] for r in doc["rows"]] == ["M2"]
    assert doc["rows"][0]["groups"] == ["deep", "demo"]


def test_train_and_evaluate_bundle_roundtrip(tiny_store, fast_cfg, tmp_path):
    model, extra = train_bundle(tiny_store, fast_cfg)
    assert extra["config"] == fast_cfg
    path = tmp_path / "model.slm1"
    save_bundle(path, model, extra)
    loaded, extra_back = load_bundle(path)
    assert extra_back == json.loads(json.dumps(extra))

    direct = evaluate_bundle(model, tiny_store, fast_cfg)
    from_disk = evaluate_bundle(loaded, tiny_store, fast_cfg)
    assert direct["workflow"] == "evaluate"
    assert direct["models"] == from_disk["models"]
    assert direct["predictions"] == from_disk["predictions"]
    # trained on all samples, evaluated on all samples
    assert direct["n_samples"] == len(tiny_store)


def test_write_report_stable_bytes(tmp_path):
    doc = {"b": [1, 2], "a": {"y": 0.5, "x": None}}
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    write_report(p1, doc)
    write_report(p2, doc)
    raw = p1.read_bytes()
    assert raw == p2.read_bytes()
    assert raw.endswith(b"\n")
    assert json.loads(raw) == doc
    assert raw.index(b'"a"') < raw.index(b'"b"')  # sorted keys


def test_format_models_table():
    models = {
        "logreg": {"macro_f1": 0.8312, "accuracy": 0.75,
                   "macro_ap": 0.9, "macro_auc": 1.0},
        ENSEMBLE_KEY: {"macro_f1": 0.9, "accuracy": 0.85,
                       "macro_ap": 0.95, "macro_auc": 0.995},
    }
    text = format_models_table(models)
    lines = text.splitlines()
    assert lines[0].startswith("model")
    for col in ("F1", "acc", "AP", "AUC"):
        assert col in lines[0]
    assert lines[1].startswith("logreg")
    assert "83.12" in lines[1] and "75.00" in lines[1]
    assert lines[-1].startswith("ensemble")
    assert "99.50" in lines[-1]


def test_format_ablation_outputs():
    doc = {"rows": [{
        "preset": "M1", "groups": ["deep"], "fused_dim": 768,
        "metrics": {"macro_f1": 0.5, "accuracy": 0.25,
                    "macro_ap": 1.0, "macro_auc": 0.0},
    }]}
    table = format_ablation_table(doc)
    assert table.splitlines()[0].endswith("dims")
    assert "768" in table.splitlines()[1]
    assert ablation_csv(doc) == (
        "preset,macro_f1,accuracy,pr_auc,auc_roc,fused_dim\n"
        "M1,50.00,25.00,100.00,0.00,768\n"
    )
