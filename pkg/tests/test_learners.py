"""Base learners: logistic regression, isotonic maps, tree ensembles."""

import numpy as np
import pytest

from lesionfuse.errors import ConfigError, DataError, LeakageError
from lesionfuse.learners.isotonic import IsotonicMap, calibrate, fit_isotonic
from lesionfuse.learners.logreg import softmax, train_logreg
from lesionfuse.learners.stacking import fold_plan, oof_probabilities
from lesionfuse.learners.trees import train_extra_trees, train_gbdt

from _oracles import exhaustive_isotonic


def _blobs(rng, n_per=30, spread=0.4):
    centers = np.array([[0, 0], [4, 0], [0, 4], [4, 4]], dtype=float)
    X = np.vstack([
        c + rng.normal(scale=spread, size=(n_per, 2)) for c in centers
    ])
    y = np.repeat(np.arange(4), n_per)
    return X, y


# ------------------------------------------------------------------ logistic

def test_softmax_rows_sum_to_one_and_shift_invariance(rng):
    z = rng.normal(size=(20, 4)) * 50
    p = softmax(z)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(softmax(z + 1000.0), p, atol=1e-12)


def test_logreg_separable_blobs(rng):
    X, y = _blobs(rng)
    model = train_logreg(X, y)
    pred = model.predict_proba(X).argmax(axis=1)
    assert (pred == y).mean() == 1.0


def test_logreg_null_features_learn_priors(rng):
    y = np.array([0] * 6 + [1] * 3 + [2] * 2 + [3] * 1)
    X = np.zeros((12, 3))
    model = train_logreg(X, y, l2=0.0, max_iter=2000, tol=1e-10)
    p = model.predict_proba(np.zeros((1, 3)))[0]
    np.testing.assert_allclose(p, [0.5, 0.25, 1 / 6, 1 / 12], atol=1e-6)


def test_logreg_rejects_degenerate_input():
    with pytest.raises(DataError):
        train_logreg(np.zeros((0, 2)), np.array([], dtype=int))
    with pytest.raises(DataError):
        train_logreg(np.zeros((5, 2)), np.zeros(5, dtype=int))


def test_logreg_deterministic(rng):
    X, y = _blobs(rng, n_per=10)
    a = train_logreg(X, y)
    b = train_logreg(X, y)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.bias, b.bias)


# ------------------------------------------------------------------ isotonic

def test_isotonic_matches_exhaustive_search(rng):
    for trial in range(200):
        n = int(rng.integers(1, 9))
        if trial % 3 == 0:
            scores = rng.integers(0, 4, size=n).astype(float)  # force ties
        else:
            scores = rng.normal(size=n)
        targets = rng.random(n)
        fit = fit_isotonic(scores, targets)
        got = fit.evaluate(scores)
        want = exhaustive_isotonic(scores, targets)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)


def test_isotonic_values_nondecreasing(rng):
    fit = fit_isotonic(rng.normal(size=60), rng.random(60))
    assert (np.diff(fit.values) >= -1e-12).all()


def test_isotonic_already_monotone_is_identity():
    scores = np.array([0.0, 1.0, 2.0, 3.0])
    targets = np.array([0.1, 0.2, 0.6, 0.9])
    fit = fit_isotonic(scores, targets)
    np.testing.assert_allclose(fit.evaluate(scores), targets, atol=1e-15)


def test_isotonic_ties_pool_their_targets():
    fit = fit_isotonic([1.0, 1.0, 2.0], [0.0, 1.0, 0.75])
    np.testing.assert_allclose(fit.evaluate([1.0, 2.0]), [0.5, 0.75])


def test_isotonic_interpolates_between_breakpoints():
    fit = fit_isotonic([0.0, 1.0], [0.2, 0.8])
    assert fit.evaluate(0.5) == pytest.approx(0.5)
    assert fit.evaluate(-5.0) == pytest.approx(0.2)  # clamps at the ends
    assert fit.evaluate(5.0) == pytest.approx(0.8)


def test_calibrate_floors_and_renormalizes():
    collapsing = IsotonicMap(
        breakpoints=np.array([0.0, 1.0]), values=np.array([0.0, 0.0])
    )
    identity = IsotonicMap(
        breakpoints=np.array([0.0, 1.0]), values=np.array([0.0, 1.0])
    )
    maps = [identity, identity, collapsing, collapsing]
    out = calibrate(np.array([[0.5, 0.1, 0.2, 0.2]]), maps)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-15)
    assert out[0, 2] > 0.0  # floored, not zero
    assert out[0, 0] == pytest.approx(0.5 / (0.6 + 2e-6))


def test_fit_isotonic_rejects_empty():
    with pytest.raises(DataError):
        fit_isotonic([], [])


# --------------------------------------------------------------- extra trees

def test_extra_trees_fit_blobs_and_rows_normalized(rng):
    X, y = _blobs(rng, n_per=20)
    model = train_extra_trees(X, y, n_trees=40, seed=3)
    P = model.predict_proba(X)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)
    assert (P.argmax(axis=1) == y).mean() == 1.0


def test_extra_trees_seed_determinism(rng):
    X, y = _blobs(rng, n_per=8)
    a = train_extra_trees(X, y, n_trees=10, seed=5).predict_proba(X)
    b = train_extra_trees(X, y, n_trees=10, seed=5).predict_proba(X)
    c = train_extra_trees(X, y, n_trees=10, seed=6).predict_proba(X)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_extra_trees_rejects_bad_config(rng):
    X, y = _blobs(rng, n_per=4)
    with pytest.raises(ConfigError):
        train_extra_trees(X, y, n_trees=0)


# ---------------------------------------------------------------------- gbdt

@pytest.mark.parametrize("variant", ["level", "leaf"])
def test_gbdt_fits_blobs(variant, rng):
    X, y = _blobs(rng, n_per=15)
    model = train_gbdt(X, y, variant=variant, rounds=40)
    P = model.predict_proba(X)
    assert (P.argmax(axis=1) == y).mean() >= 0.95
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_gbdt_zero_rounds_predicts_class_priors(rng):
    X = rng.normal(size=(12, 3))
    y = np.array([0] * 6 + [1] * 3 + [2] * 3)
    model = train_gbdt(X, y, rounds=0)
    P = model.predict_proba(rng.normal(size=(4, 3)))
    # absent class 3 is clipped to ~0, softmax renormalizes the rest
    np.testing.assert_allclose(
        P[:, :3], np.tile([0.5, 0.25, 0.25], (4, 1)), atol=1e-11
    )


def test_gbdt_is_deterministic(rng):
    X, y = _blobs(rng, n_per=6)
    a = train_gbdt(X, y, rounds=8).decision_function(X)
    b = train_gbdt(X, y, rounds=8).decision_function(X)
    np.testing.assert_array_equal(a, b)


def test_gbdt_learns_jittered_xor(rng):
    base = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    X = np.tile(base, (25, 1)) + rng.normal(scale=0.05, size=(100, 2))
    y = np.tile([0, 1, 1, 0], 25)
    for variant in ("level", "leaf"):
        model = train_gbdt(X, y, variant=variant, rounds=60)
        acc = (model.predict_proba(X).argmax(axis=1) == y).mean()
        assert acc == 1.0, variant


def test_gbdt_rejects_unknown_variant(rng):
    X, y = _blobs(rng, n_per=4)
    with pytest.raises(ConfigError):
        train_gbdt(X, y, variant="depthwise")
    with pytest.raises(DataError):
        train_gbdt(X, np.zeros_like(y), rounds=2)


# ------------------------------------------------------------------ stacking

def _patients(n_samples, per_patient=2):
    return [f"p{i // per_patient}" for i in range(n_samples)]


def test_fold_plan_keeps_patients_together(rng):
    y = rng.integers(0, 4, size=40)
    pids = _patients(40)
    folds = fold_plan(pids, y, 4, seed=2)
    for pid in set(pids):
        vals = {f for f, p in zip(folds, pids) if p == pid}
        assert len(vals) == 1


def test_fold_plan_needs_enough_patients():
    with pytest.raises(ConfigError):
        fold_plan(["a", "a", "b"], [0, 1, 0], 3, seed=0)


def test_oof_probabilities_never_seen_by_trainer(rng):
    X, y = _blobs(rng, n_per=12)
    pids = _patients(48)
    seen = {}

    def spy_train(Xt, yt, seed):
        model = train_logreg(Xt, yt, max_iter=50)
        seen[id(model)] = Xt.shape[0]

        class Wrapper:
            def predict_proba(self, Xe):
                return model.predict_proba(Xe)

        return Wrapper()

    out = oof_probabilities(X, y, pids, spy_train, k=3, seed=1)
    assert out.shape == (48, 4)
    assert np.isfinite(out).all()
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
    # every fold excluded some rows from training
    assert all(v < 48 for v in seen.values())


def test_oof_fold_layout_shared_across_learners(rng):
    X, y = _blobs(rng, n_per=10)
    pids = _patients(40)
    layouts = []

    def capture(Xt, yt, seed):
        layouts.append(Xt.shape[0])
        return train_logreg(Xt, yt, max_iter=20)

    oof_probabilities(X, y, pids, capture, k=3, seed=9)
    first = list(layouts)
    layouts.clear()
    oof_probabilities(X, y, pids, capture, k=3, seed=9)
    assert layouts == first  # same seed, same fold sizes in same order


def test_oof_train_seeds_length_checked(rng):
    X, y = _blobs(rng, n_per=6)
    pids = _patients(24)

    def fn(Xt, yt, seed):
        return train_logreg(Xt, yt, max_iter=20)

    with pytest.raises(ConfigError):
        oof_probabilities(X, y, pids, fn, k=3, seed=0, train_seeds=[1, 2])
