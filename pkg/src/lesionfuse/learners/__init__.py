"""Four from-scratch calibrated base classifiers plus stacking helpers.

Canonical learner order everywhere in the package: logreg, extra_trees,
gbdt_level, gbdt_leaf.
"""

from lesionfuse.learners.isotonic import (
    IsotonicMap,
    calibrate,
    fit_isotonic,
)
from lesionfuse.learners.logreg import (
    LogisticModel,
    softmax,
    train_logreg,
)
from lesionfuse.learners.stacking import oof_probabilities
from lesionfuse.learners.trees import (
    ExtraTreesModel,
    GbdtModel,
    train_extra_trees,
    train_gbdt,
)

LEARNER_KINDS = ("logreg", "extra_trees", "gbdt_level", "gbdt_leaf")

__all__ = [
    "LEARNER_KINDS",
    "IsotonicMap",
    "LogisticModel",
    "ExtraTreesModel",
    "GbdtModel",
    "softmax",
    "fit_isotonic",
    "calibrate",
    "train_logreg",
    "train_extra_trees",
    "train_gbdt",
    "oof_probabilities",
]
