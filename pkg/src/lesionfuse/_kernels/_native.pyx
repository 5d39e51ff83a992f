# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the pure-numpy kernels.

Every function mirrors lesionfuse._kernels._numpy operation for operation:
same accumulation order, same expression shapes, no fused multiply-adds
(the extension builds with -ffp-contract=off).  Outputs are bit-identical
to the fallback, which is what the backend-equivalence tests assert.
"""

import math

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

_SQRT_HALF = math.sqrt(0.5)

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

# Integer/fractional parts precomputed exactly as the fallback derives them.
_LBP_OY = np.array([math.floor(dy) for dy, dx in LBP_OFFSETS], dtype=np.int64)
_LBP_OX = np.array([math.floor(dx) for dy, dx in LBP_OFFSETS], dtype=np.int64)
_LBP_FY = np.array(
    [dy - math.floor(dy) for dy, dx in LBP_OFFSETS], dtype=np.float64
)
_LBP_FX = np.array(
    [dx - math.floor(dx) for dy, dx in LBP_OFFSETS], dtype=np.float64
)


def glcm_counts(quant, long drow, long dcol):
    q_arr = np.ascontiguousarray(quant, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] q = q_arr
    cdef long h = q.shape[0]
    cdef long w = q.shape[1]
    out_arr = np.zeros((8, 8), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef long r0 = -drow if drow < 0 else 0
    cdef long r1 = h - drow if drow > 0 else h
    cdef long c0 = -dcol if dcol < 0 else 0
    cdef long c1 = w - dcol if dcol > 0 else w
    cdef long r, c
    cdef cnp.int64_t a, b
    if r1 <= r0 or c1 <= c0:
        return out_arr
    with nogil:
        for r in range(r0, r1):
            for c in range(c0, c1):
                a = q[r, c]
                b = q[r + drow, c + dcol]
                out[a, b] += 1.0
                out[b, a] += 1.0
    return out_arr


def lbp_counts(gray):
    g_arr = np.ascontiguousarray(gray, dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef long h = g.shape[0]
    cdef long w = g.shape[1]
    out_arr = np.zeros(10, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef cnp.int64_t[::1] oy = _LBP_OY
    cdef cnp.int64_t[::1] ox = _LBP_OX
    cdef double[::1] fy = _LBP_FY
    cdef double[::1] fx = _LBP_FX
    cdef long r, c, p, set_count, transitions, bin_idx
    cdef long rr, cc
    cdef double center, va, vb, vc, vd, top, bot, val
    cdef bint bits[8]
    if h < 3 or w < 3:
        return out_arr
    with nogil:
        for r in range(1, h - 1):
            for c in range(1, w - 1):
                center = g[r, c]
                for p in range(8):
                    rr = r + oy[p]
                    cc = c + ox[p]
                    if fy[p] == 0.0 and fx[p] == 0.0:
                        val = g[rr, cc]
                    else:
                        va = g[rr, cc]
                        vb = g[rr, cc + 1]
                        vc = g[rr + 1, cc]
                        vd = g[rr + 1, cc + 1]
                        top = va + fx[p] * (vb - va)
                        bot = vc + fx[p] * (vd - vc)
                        val = top + fy[p] * (bot - top)
                    bits[p] = val >= center
                set_count = 0
                transitions = 0
                for p in range(8):
                    if bits[p]:
                        set_count += 1
                    if bits[p] != bits[(p + 1) % 8]:
                        transitions += 1
                bin_idx = set_count if transitions <= 2 else 9
                out[bin_idx] += 1.0
    return out_arr


def convolve_valid(padded, kernel):
    p_arr = np.ascontiguousarray(padded, dtype=np.float64)
    k_arr = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] k = k_arr
    cdef long kh = k.shape[0]
    cdef long kw = k.shape[1]
    cdef long oh = p.shape[0] - kh + 1
    cdef long ow = p.shape[1] - kw + 1
    out_arr = np.zeros((oh, ow), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef long r, c, i, j
    cdef double acc
    with nogil:
        for r in range(oh):
            for c in range(ow):
                acc = 0.0
                for i in range(kh):
                    for j in range(kw):
                        acc = acc + k[i, j] * p[r + i, c + j]
                out[r, c] = acc
    return out_arr


def gini_scores(values, labels, thresholds, long n_classes, long min_leaf):
    v_arr = np.ascontiguousarray(values, dtype=np.float64)
    y_arr = np.ascontiguousarray(labels, dtype=np.int64)
    t_arr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef cnp.int64_t[::1] y = y_arr
    cdef double[::1] thr = t_arr
    cdef long k = v.shape[0]
    cdef long n = v.shape[1]
    out_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] out = out_arr
    totals_arr = np.zeros(n_classes, dtype=np.int64)
    cnt_arr = np.zeros(n_classes, dtype=np.int64)
    cdef cnp.int64_t[::1] totals = totals_arr
    cdef cnp.int64_t[::1] cnt_l = cnt_arr
    cdef long i, j, c, n_l, n_r
    cdef cnp.int64_t cl, cr
    cdef double s_l, s_r, dl, dr
    with nogil:
        for j in range(n):
            totals[y[j]] += 1
        for i in range(k):
            for c in range(n_classes):
                cnt_l[c] = 0
            n_l = 0
            for j in range(n):
                if v[i, j] < thr[i]:
                    cnt_l[y[j]] += 1
                    n_l += 1
            n_r = n - n_l
            if n_l < min_leaf or n_r < min_leaf:
                out[i] = -INFINITY
                continue
            s_l = 0.0
            s_r = 0.0
            for c in range(n_classes):
                cl = cnt_l[c]
                cr = totals[c] - cl
                dl = <double> cl
                dr = <double> cr
                s_l = s_l + dl * dl
                s_r = s_r + dr * dr
            out[i] = s_l / (<double> n_l) + s_r / (<double> n_r)
    return out_arr


def split_scan(X, node_order, resid, double l2, long min_leaf):
    x_arr = np.ascontiguousarray(X, dtype=np.float64)
    o_arr = np.ascontiguousarray(node_order, dtype=np.int64)
    r_arr = np.ascontiguousarray(resid, dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef cnp.int64_t[:, ::1] order = o_arr
    cdef double[::1] res = r_arr
    cdef long d = order.shape[0]
    cdef long m = order.shape[1]
    scores_arr = np.full(d, -np.inf, dtype=np.float64)
    thrs_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] scores = scores_arr
    cdef double[::1] thrs = thrs_arr
    if m < 2 or m < 2 * min_leaf:
        return scores_arr, thrs_arr
    vbuf_arr = np.empty(m, dtype=np.float64)
    cbuf_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] vbuf = vbuf_arr
    cdef double[::1] cbuf = cbuf_arr
    cdef long f, j, best_j, idx, nl, nr
    cdef double run, total, gl, gr, gain, best_g, left_v, right_v, t
    with nogil:
        for f in range(d):
            run = 0.0
            for j in range(m):
                idx = order[f, j]
                vbuf[j] = x[idx, f]
                run = run + res[idx]
                cbuf[j] = run
            total = cbuf[m - 1]
            best_g = -INFINITY
            best_j = -1
            for j in range(m - 1):
                if vbuf[j] < vbuf[j + 1]:
                    nl = j + 1
                    nr = m - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        gl = cbuf[j]
                        gr = total - gl
                        gain = (gl * gl / (<double> nl + l2)
                                + gr * gr / (<double> nr + l2))
                        if gain > best_g:
                            best_g = gain
                            best_j = j
            if best_j >= 0:
                scores[f] = best_g
                left_v = vbuf[best_j]
                right_v = vbuf[best_j + 1]
                t = 0.5 * (left_v + right_v)
                if t >= right_v:
                    t = left_v
                thrs[f] = t
    return scores_arr, thrs_arr


def tree_apply(feature, threshold, left, right, X, bint go_left_on_equal):
    f_arr = np.ascontiguousarray(feature, dtype=np.int64)
    t_arr = np.ascontiguousarray(threshold, dtype=np.float64)
    l_arr = np.ascontiguousarray(left, dtype=np.int64)
    r_arr = np.ascontiguousarray(right, dtype=np.int64)
    x_arr = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.int64_t[::1] feat = f_arr
    cdef double[::1] thr = t_arr
    cdef cnp.int64_t[::1] lc = l_arr
    cdef cnp.int64_t[::1] rc = r_arr
    cdef double[:, ::1] x = x_arr
    cdef long n = x.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef long i
    cdef cnp.int64_t node
    cdef double v
    with nogil:
        for i in range(n):
            node = 0
            while feat[node] >= 0:
                v = x[i, feat[node]]
                if go_left_on_equal:
                    node = lc[node] if v <= thr[node] else rc[node]
                else:
                    node = lc[node] if v < thr[node] else rc[node]
            out[i] = node
    return out_arr
