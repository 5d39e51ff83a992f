"""Patient-grouped stratified splitting.

All splits operate on patients, never raw samples, so no patient can end
up on both sides of a boundary.  Stratification uses the patient's
majority label (ties to the lowest class index).  Fold assignment deals
patients round-robin with a pointer that runs across classes, which makes
K equal to the patient count degenerate to leave-one-patient-out.
"""

import math
from dataclasses import dataclass

import numpy as np

from lesionfuse.core import LABELS
from lesionfuse.errors import ConfigError, DataError, LeakageError


def patient_majority_labels(dataset) -> dict:
    """patient_id -> majority label over the patient's samples."""
    votes = {}
    for s in dataset.samples:
        counts = votes.setdefault(s.patient_id, [0] * len(LABELS))
        counts[s.label] += 1
    return {pid: int(np.argmax(c)) for pid, c in votes.items()}


def _by_class(patient_labels):
    classes = [[] for _ in LABELS]
    for pid in sorted(patient_labels):
        classes[patient_labels[pid]].append(pid)
    return classes


def grouped_stratified_holdout(patient_labels, fraction, seed):
    """Split patients into (holdout, development) sets, per-class sized.

    Per class, round-half-up(fraction * count) patients go to holdout,
    drawn by seeded shuffle of the sorted patient ids.
    """
    if not patient_labels:
        raise DataError("no patients to split")
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"holdout fraction {fraction} outside [0, 1]")
    rng = np.random.default_rng(seed)
    holdout = set()
    for pids in _by_class(patient_labels):
        if not pids:
            continue
        pids = list(pids)
        rng.shuffle(pids)
        take = int(math.floor(fraction * len(pids) + 0.5))
        holdout.update(pids[:take])
    development = set(patient_labels) - holdout
    return holdout, development


def grouped_stratified_kfold(patient_labels, k, seed) -> dict:
    """patient_id -> fold index, stratified round-robin deal.

    One pointer advances across all classes, so per-class fold counts
    differ by at most 1 and k == len(patients) is leave-one-patient-out.
    """
    if k < 2:
        raise ConfigError(f"fold count {k} must be >= 2")
    if k > len(patient_labels):
        raise ConfigError(
            f"fold count {k} exceeds patient count {len(patient_labels)}"
        )
    rng = np.random.default_rng(seed)
    fold_of = {}
    pointer = 0
    for pids in _by_class(patient_labels):
        pids = list(pids)
        rng.shuffle(pids)
        for pid in pids:
            fold_of[pid] = pointer % k
            pointer += 1
    return fold_of


@dataclass(frozen=True)
class SplitPlan:
    holdout_patients: frozenset
    development_patients: frozenset
    fold_of: dict
    k: int

    def __post_init__(self):
        overlap = self.holdout_patients & self.development_patients
        if overlap:
            raise LeakageError(
                f"patients on both split sides: {sorted(overlap)[:5]}"
            )
        if set(self.fold_of) != set(self.development_patients):
            raise LeakageError("fold map does not cover development patients")


def make_split_plan(dataset, fraction, k, seed) -> SplitPlan:
    """Holdout + k-fold plan from one seed (folds use a derived stream)."""
    labels = patient_majority_labels(dataset)
    holdout, development = grouped_stratified_holdout(labels, fraction, seed)
    dev_labels = {pid: labels[pid] for pid in development}
    fold_of = grouped_stratified_kfold(dev_labels, k, derive_seed(seed, 1))
    return SplitPlan(
        holdout_patients=frozenset(holdout),
        development_patients=frozenset(development),
        fold_of=fold_of,
        k=k,
    )


def derive_seed(*parts) -> int:
    """Collapse an integer path into one independent 32-bit seed.

    A nonzero terminator guards against SeedSequence's trailing-zero
    collapse, which would alias paths like (7,) and (7, 0).
    """
    entropy = tuple(parts) + (0x5EED,)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def sample_indices_for_patients(dataset, patients):
    pids = set(patients)
    return [
        i for i, s in enumerate(dataset.samples) if s.patient_id in pids
    ]


def assert_no_patient_overlap(train_patients, eval_patients):
    overlap = set(train_patients) & set(eval_patients)
    if overlap:
        raise LeakageError(
            f"patient leakage across split: {sorted(overlap)[:5]}"
        )
