"""Pure-numpy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is not
available (or when LESIONFUSE_KERNELS=numpy).  Every function here is the
semantic reference for its compiled twin: the two backends perform the
same floating-point operations in the same order, so results are
bit-identical, not merely close.  Keep any change mirrored in _native.pyx.
"""

import math

import numpy as np

_SQRT_HALF = math.sqrt(0.5)

# (drow, dcol) of the 8 unit-circle neighbors, counter-clockwise from +x.
# Cardinal points are exact integers; diagonals sample at +-sqrt(1/2).
LBP_OFFSETS = (
    (0.0, 1.0),
    (-_SQRT_HALF, _SQRT_HALF),
    (-1.0, 0.0),
    (-_SQRT_HALF, -_SQRT_HALF),
    (0.0, -1.0),
    (_SQRT_HALF, -_SQRT_HALF),
    (1.0, 0.0),
    (_SQRT_HALF, _SQRT_HALF),
)


def glcm_counts(quant, drow, dcol):
    """Co-occurrence counts of 8-level images for one offset.

    Accumulates the offset and its negation, so the result is symmetric.
    Returns an (8, 8) float64 count matrix (un-normalized).
    """
    q = np.ascontiguousarray(quant, dtype=np.int64)
    h, w = q.shape
    r0, r1 = max(0, -drow), min(h, h - drow)
    c0, c1 = max(0, -dcol), min(w, w - dcol)
    if r1 <= r0 or c1 <= c0:
        return np.zeros((8, 8), dtype=np.float64)
    a = q[r0:r1, c0:c1]
    b = q[r0 + drow:r1 + drow, c0 + dcol:c1 + dcol]
    idx = (a * 8 + b).ravel()
    counts = np.bincount(idx, minlength=64).reshape(8, 8).astype(np.float64)
    return counts + counts.T


def lbp_counts(gray):
    """Rotation-invariant uniform LBP (P=8, R=1) bin counts.

    Bins 0..8 hold uniform patterns keyed by the number of set bits, bin 9
    collects non-uniform patterns.  Neighbor >= center sets a bit; diagonal
    neighbors are sampled with nested-lerp bilinear interpolation (exact on
    constant images).  Counts are over interior pixels only.
    """
    g = np.ascontiguousarray(gray, dtype=np.float64)
    h, w = g.shape
    center = g[1:h - 1, 1:w - 1]
    bits = []
    for drow, dcol in LBP_OFFSETS:
        oy, ox = math.floor(drow), math.floor(dcol)
        fy, fx = drow - oy, dcol - ox
        if fy == 0.0 and fx == 0.0:
            val = g[1 + oy:h - 1 + oy, 1 + ox:w - 1 + ox]
        else:
            a = g[1 + oy:h - 1 + oy, 1 + ox:w - 1 + ox]
            b = g[1 + oy:h - 1 + oy, 2 + ox:w + ox]
            c = g[2 + oy:h + oy, 1 + ox:w - 1 + ox]
            d = g[2 + oy:h + oy, 2 + ox:w + ox]
            top = a + fx * (b - a)
            bot = c + fx * (d - c)
            val = top + fy * (bot - top)
        bits.append(val >= center)
    bits = np.stack(bits, axis=0)
    set_count = bits.sum(axis=0)
    transitions = np.zeros_like(set_count)
    for p in range(8):
        transitions += bits[p] != bits[(p + 1) % 8]
    bin_idx = np.where(transitions <= 2, set_count, 9)
    return np.bincount(bin_idx.ravel(), minlength=10).astype(np.float64)


def convolve_valid(padded, kernel):
    """Valid-mode 2-D correlation, accumulated tap by tap in row-major order."""
    p = np.ascontiguousarray(padded, dtype=np.float64)
    k = np.ascontiguousarray(kernel, dtype=np.float64)
    kh, kw = k.shape
    oh, ow = p.shape[0] - kh + 1, p.shape[1] - kw + 1
    out = np.zeros((oh, ow), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            out += k[i, j] * p[i:i + oh, j:j + ow]
    return out


def gini_scores(values, labels, thresholds, n_classes, min_leaf):
    """Split quality for candidate (feature, threshold) pairs.

    values: (k, n) candidate feature columns for the node's samples.
    Score of a candidate is sum_c cntL_c^2 / nL + sum_c cntR_c^2 / nR for
    the partition (v < thr | v >= thr); maximizing it minimizes weighted
    Gini impurity.  Candidates leaving a child below min_leaf get -inf.
    """
    v = np.ascontiguousarray(values, dtype=np.float64)
    thr = np.asarray(thresholds, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    onehot = np.zeros((y.shape[0], n_classes), dtype=np.float64)
    onehot[np.arange(y.shape[0]), y] = 1.0
    mask = v < thr[:, None]
    cnt_l = mask.astype(np.float64) @ onehot
    totals = onehot.sum(axis=0)
    cnt_r = totals[None, :] - cnt_l
    n_l = cnt_l.sum(axis=1)
    n_r = cnt_r.sum(axis=1)
    valid = (n_l >= min_leaf) & (n_r >= min_leaf)
    s_l = (cnt_l * cnt_l).sum(axis=1)
    s_r = (cnt_r * cnt_r).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = s_l / n_l + s_r / n_r
    return np.where(valid, score, -np.inf)


def split_scan(X, node_order, resid, l2, min_leaf):
    """Best regression split per feature for one tree node.

    X:          (N, d) training matrix.
    node_order: (d, m) per-feature ascending row indices of the node's
                samples (the caller keeps these sorted by stable partition
                of the root argsort, so no re-sorting happens here).
    resid:      (N,) regression targets.
    Returns (best_score, best_thr), both (d,), where score is
    GL^2/(nL+l2) + GR^2/(nR+l2) evaluated at boundaries between distinct
    values; -inf where no valid boundary exists.  Thresholds are midpoints,
    nudged down to the left value when rounding would land on the right.
    """
    d, m = node_order.shape
    scores = np.full(d, -np.inf, dtype=np.float64)
    thrs = np.zeros(d, dtype=np.float64)
    if m < 2 or m < 2 * min_leaf:
        return scores, thrs
    rows = np.arange(d)
    sv = X[node_order, rows[:, None]]
    sr = resid[node_order]
    csum = np.cumsum(sr, axis=1)
    total = csum[:, -1]
    nl = np.arange(1, m, dtype=np.float64)
    nr = m - nl
    gl = csum[:, :-1]
    gr = total[:, None] - gl
    gain = gl * gl / (nl + l2) + gr * gr / (nr + l2)
    ok = (sv[:, :-1] < sv[:, 1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    gain = np.where(ok, gain, -np.inf)
    best = np.argmax(gain, axis=1)
    scores = gain[rows, best]
    left_v = sv[rows, best]
    right_v = sv[rows, best + 1]
    thr = 0.5 * (left_v + right_v)
    thrs = np.where(thr >= right_v, left_v, thr)
    thrs = np.where(np.isfinite(scores), thrs, 0.0)
    return scores, thrs


def tree_apply(feature, threshold, left, right, X, go_left_on_equal):
    """Route samples to leaves; returns the leaf node index per row.

    feature[i] < 0 marks node i as a leaf.  Comparison is x <= thr when
    go_left_on_equal else x < thr.
    """
    f = np.asarray(feature, dtype=np.int64)
    t = np.asarray(threshold, dtype=np.float64)
    lc = np.asarray(left, dtype=np.int64)
    rc = np.asarray(right, dtype=np.int64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        cur_f = f[node]
        internal = cur_f >= 0
        if not internal.any():
            return node
        vals = X[np.arange(n), np.where(internal, cur_f, 0)]
        if go_left_on_equal:
            goes_left = vals <= t[node]
        else:
            goes_left = vals < t[node]
        nxt = np.where(goes_left, lc[node], rc[node])
        node = np.where(internal, nxt, node)
