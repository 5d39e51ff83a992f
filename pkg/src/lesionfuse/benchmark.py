"""Benchmark the compiled kernels against the numpy fallback.

Runs every hot kernel on a workload shaped like real training, checks
the two backends agree bit for bit, and prints timing plus speedup:

    python3 -m lesionfuse.benchmark [--repeat N]
"""

import argparse
import time

import numpy as np

from lesionfuse._kernels import _numpy


def _load_native():
    try:
        from lesionfuse._kernels import _native
    except ImportError:
        return None
    return _native


def _tree_arrays(rng, depth, n_features):
    """Complete binary tree: node i has children 2i+1, 2i+2."""
    n_nodes = 2 ** (depth + 1) - 1
    n_internal = 2 ** depth - 1
    feature = np.full(n_nodes, -1, dtype=np.int64)
    feature[:n_internal] = rng.integers(0, n_features, n_internal)
    threshold = np.zeros(n_nodes)
    threshold[:n_internal] = rng.normal(size=n_internal)
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    idx = np.arange(n_internal)
    left[idx] = 2 * idx + 1
    right[idx] = 2 * idx + 2
    return feature, threshold, left, right


def build_workloads(seed=0):
    rng = np.random.default_rng(seed)
    quant = rng.integers(0, 8, size=(64, 64)).astype(np.int64)
    gray = rng.random((64, 64))
    padded = rng.random((66, 66))
    kernel = rng.normal(size=(3, 3))

    n, d = 272, 908
    X = rng.normal(size=(n, d))
    labels = rng.integers(0, 4, size=n).astype(np.int64)
    resid = rng.normal(size=n)
    node_order = np.argsort(X, axis=0, kind="stable").T.copy()
    values = X.T[:64].copy()
    thresholds = rng.normal(size=64)

    feature, threshold, left, right = _tree_arrays(rng, 5, d)
    X_apply = rng.normal(size=(2000, d))

    return [
        ("glcm_counts", (quant, 1, 0), {}),
        ("lbp_counts", (gray,), {}),
        ("convolve_valid", (padded, kernel), {}),
        ("gini_scores", (values, labels, thresholds, 4, 2), {}),
        ("split_scan", (X, node_order, resid, 1.0, 2), {}),
        ("tree_apply", (feature, threshold, left, right, X_apply, True), {}),
    ]


def _best_time(fn, args, kwargs, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _identical(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_identical(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def run(repeat=20):
    native = _load_native()
    rows = []
    for name, args, kwargs in build_workloads():
        t_np, out_np = _best_time(getattr(_numpy, name), args, kwargs, repeat)
        if native is None:
            rows.append((name, t_np, None, None))
            continue
        t_nat, out_nat = _best_time(getattr(native, name), args, kwargs, repeat)
        match = _identical(out_np, out_nat)
        rows.append((name, t_np, t_nat, match))
    return rows, native is not None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20,
                        help="timing repetitions per kernel (best-of)")
    args = parser.parse_args(argv)

    rows, have_native = run(args.repeat)
    if not have_native:
        print("compiled extension not importable; timing numpy backend only")
    header = f"{'kernel':<16}{'numpy ms':>10}{'native ms':>11}" \
             f"{'speedup':>9}  identical"
    print(header)
    print("-" * len(header))
    all_match = True
    for name, t_np, t_nat, match in rows:
        if t_nat is None:
            print(f"{name:<16}{t_np * 1e3:>10.3f}{'-':>11}{'-':>9}  -")
            continue
        all_match &= match
        print(f"{name:<16}{t_np * 1e3:>10.3f}{t_nat * 1e3:>11.3f}"
              f"{t_np / t_nat:>9.2f}  {'yes' if match else 'NO'}")
    if have_native and not all_match:
        print("MISMATCH: backends disagree")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
