"""Isotonic calibration via pool-adjacent-violators.

Tied scores are merged (weighted by multiplicity) before pooling, which
keeps the solution identical to solving the unmerged problem.  Fitted
maps evaluate by linear interpolation between breakpoints and constant
extrapolation outside them.
"""

from dataclasses import dataclass

import numpy as np

from lesionfuse.errors import DataError

_PROB_FLOOR = 1e-6


@dataclass(frozen=True)
class IsotonicMap:
    breakpoints: np.ndarray  # ascending unique scores
    values: np.ndarray  # nondecreasing fitted values

    def evaluate(self, scores) -> np.ndarray:
        return np.interp(scores, self.breakpoints, self.values)


def fit_isotonic(scores, targets) -> IsotonicMap:
    """Monotone least-squares fit of targets against scores (PAV)."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if s.shape[0] == 0:
        raise DataError("cannot fit isotonic map on zero points")
    uniq, inverse, counts = np.unique(
        s, return_inverse=True, return_counts=True
    )
    sums = np.zeros(uniq.shape[0], dtype=np.float64)
    np.add.at(sums, inverse, t)
    means = sums / counts

    # Pool adjacent violators on the tie-merged sequence.  Each stack
    # block is (value, weight, run length in unique scores).
    vals, wts, runs = [], [], []
    for v, w in zip(means, counts.astype(np.float64)):
        cv, cw, cr = float(v), float(w), 1
        while vals and vals[-1] > cv:
            pv, pw, pr = vals.pop(), wts.pop(), runs.pop()
            cv = (pv * pw + cv * cw) / (pw + cw)
            cw = pw + cw
            cr = pr + cr
        vals.append(cv)
        wts.append(cw)
        runs.append(cr)
    fitted = np.repeat(np.array(vals), np.array(runs, dtype=np.int64))
    return IsotonicMap(breakpoints=uniq, values=fitted)


def calibrate(probs, maps) -> np.ndarray:
    """Apply per-class maps columnwise, floor, renormalize rows to 1."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != len(maps):
        raise DataError("probability matrix does not match calibrator count")
    out = np.empty_like(p)
    for c, m in enumerate(maps):
        out[:, c] = m.evaluate(p[:, c])
    out = np.maximum(out, _PROB_FLOOR)
    return out / out.sum(axis=1, keepdims=True)
