"""Run configuration: defaults, JSON loading, strict validation.

A config is a nested JSON document; unknown keys anywhere are errors so
typos fail loudly.  The fully resolved dict is echoed into every report
and bundle for reproducibility.
"""

import json
from copy import deepcopy

from lesionfuse.ensemble import SMOOTH_TARGETS
from lesionfuse.errors import ConfigError, DataError
from lesionfuse.fusion import GROUPS, normalize_groups

# per-learner keyword arguments accepted by the train functions
_LEARNER_KEYS = {
    "logreg": ("l2", "max_iter", "tol"),
    "extra_trees": ("n_trees", "min_leaf"),
    "gbdt_level": ("rounds", "learning_rate", "depth", "l2", "min_leaf"),
    "gbdt_leaf": ("rounds", "learning_rate", "max_leaves", "l2", "min_leaf"),
}

PRESETS = {
    "M1": ("deep",),
    "M2": ("deep", "demo"),
    "M3": ("deep", "hb", "demo"),
    "M4": ("deep", "hb", "tex", "demo"),
    "M5": GROUPS,
}


def default_config() -> dict:
    return {
        "seed": 0,
        "threads": 1,
        "groups": list(GROUPS),
        "preset": None,
        "learners": {kind: {} for kind in _LEARNER_KEYS},
        "smoothing": {"alpha": 0.3, "iterations": 3, "target": "meta"},
        "split": {"holdout_fraction": 0.15, "folds": 5, "stack_folds": 3},
    }


def _check_keys(doc, allowed, where):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config key in {where}: {unknown[0]}")


def _require_number(doc, where, key, low=None, high=None, integral=False):
    if key not in doc:
        return
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    if integral and not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer")
    if low is not None and v < low:
        raise ConfigError(f"{where}.{key} must be >= {low}")
    if high is not None and v > high:
        raise ConfigError(f"{where}.{key} must be <= {high}")


def validate_config(doc: dict) -> dict:
    """Merge over defaults, reject unknown keys, check ranges."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    out = default_config()
    _check_keys(doc, out, "config")

    for key in ("seed", "threads"):
        if key in doc:
            if isinstance(doc[key], bool) or not isinstance(doc[key], int):
                raise ConfigError(f"config.{key} must be an integer")
            out[key] = doc[key]
    if out["seed"] < 0:
        raise ConfigError("config.seed must be >= 0")
    if out["threads"] < 1:
        raise ConfigError("config.threads must be >= 1")

    if "groups" in doc:
        try:
            out["groups"] = list(normalize_groups(doc["groups"]))
        except DataError as exc:
            # group typos are a usage mistake, not bad input data
            raise ConfigError(str(exc)) from exc
    if "preset" in doc and doc["preset"] is not None:
        if doc["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset: {doc['preset']}")
        out["preset"] = doc["preset"]

    learners = doc.get("learners", {})
    if not isinstance(learners, dict):
        raise ConfigError("config.learners must be an object")
    _check_keys(learners, _LEARNER_KEYS, "config.learners")
    for kind, params in learners.items():
        if not isinstance(params, dict):
            raise ConfigError(f"config.learners.{kind} must be an object")
        _check_keys(params, _LEARNER_KEYS[kind], f"config.learners.{kind}")
        where = f"config.learners.{kind}"
        _require_number(params, where, "l2", low=0.0)
        _require_number(params, where, "tol", low=0.0)
        _require_number(params, where, "learning_rate", low=0.0)
        for count_key in ("max_iter", "n_trees", "min_leaf", "rounds",
                          "depth", "max_leaves"):
            low = 0 if count_key == "rounds" else 1
            _require_number(params, where, count_key, low=low, integral=True)
        out["learners"][kind] = dict(params)

    smoothing = doc.get("smoothing", {})
    if not isinstance(smoothing, dict):
        raise ConfigError("config.smoothing must be an object")
    _check_keys(smoothing, out["smoothing"], "config.smoothing")
    _require_number(smoothing, "config.smoothing", "alpha", 0.0, 1.0)
    _require_number(
        smoothing, "config.smoothing", "iterations", low=0, integral=True
    )
    if "target" in smoothing and smoothing["target"] not in SMOOTH_TARGETS:
        raise ConfigError(
            f"config.smoothing.target must be one of {SMOOTH_TARGETS}"
        )
    out["smoothing"].update(smoothing)

    split = doc.get("split", {})
    if not isinstance(split, dict):
        raise ConfigError("config.split must be an object")
    _check_keys(split, out["split"], "config.split")
    _require_number(split, "config.split", "holdout_fraction", 0.0, 1.0)
    _require_number(split, "config.split", "folds", low=2, integral=True)
    _require_number(split, "config.split", "stack_folds", low=2,
                    integral=True)
    out["split"].update(split)
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except ValueError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return validate_config(doc)


def resolve_config(path=None, **overrides) -> dict:
    """Load (or default) a config and apply non-None flag overrides.

    Supported overrides: seed, threads, groups, preset.
    """
    cfg = load_config(path) if path else validate_config({})
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(cleaned) - {"seed", "threads", "groups", "preset"}
    if unknown:
        raise ConfigError(f"unknown override: {sorted(unknown)[0]}")
    if cleaned:
        merged = deepcopy(cfg)
        merged.update(cleaned)
        cfg = validate_config(merged)
    return cfg


def active_groups(cfg: dict) -> tuple:
    """Groups selected by the preset when set, else the groups list."""
    if cfg["preset"]:
        return PRESETS[cfg["preset"]]
    return normalize_groups(cfg["groups"])
