import numpy as np
import pytest

from lesionfuse.config import default_config
from lesionfuse.extract import extract_from_manifest
from lesionfuse.synth import SynthConfig, generate_cohort


@pytest.fixture(scope="session")
def tiny_cohort(tmp_path_factory):
    """A small but learnable cohort written to disk once per session."""
    root = tmp_path_factory.mktemp("cohort")
    cfg = SynthConfig(
        patients=14,
        images_min=2,
        images_max=3,
        height=16,
        width=16,
        deep_signal=0.9,
        spectral_signal=0.9,
        texture_signal=0.9,
        demographic_signal=0.9,
        seed=11,
    )
    return generate_cohort(cfg, root)


@pytest.fixture(scope="session")
def tiny_store(tiny_cohort):
    return extract_from_manifest(tiny_cohort)


@pytest.fixture
def fast_cfg():
    """Config with shrunken learner budgets so workflow tests stay quick."""
    cfg = default_config()
    cfg["learners"] = {
        "logreg": {"max_iter": 60},
        "extra_trees": {"n_trees": 30},
        "gbdt_level": {"rounds": 10, "depth": 2},
        "gbdt_leaf": {"rounds": 10, "max_leaves": 4},
    }
    cfg["split"] = {"holdout_fraction": 0.25, "folds": 3, "stack_folds": 3}
    return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
