"""Multinomial logistic regression, full-batch deterministic training.

Plain gradient descent with Armijo backtracking: no randomness, no
stochastic batching, so the same inputs always yield the same weights.
The loss (cross-entropy + 0.5 * l2 * ||W||^2, bias unregularized) is
asserted non-increasing at every step.
"""

from dataclasses import dataclass

import numpy as np

from lesionfuse.errors import DataError

N_CLASSES = 4

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-20


def softmax(z) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # (4, d)
    bias: np.ndarray  # (4,)
    n_iter: int

    def predict_proba(self, X) -> np.ndarray:
        return softmax(X @ self.weights.T + self.bias)


def _loss(X, Y, W, b, l2):
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    ce = float((log_norm - (logits * Y).sum(axis=1)).mean())
    return ce + 0.5 * l2 * float((W * W).sum())


def train_logreg(X, y, l2=1e-3, max_iter=500, tol=1e-6) -> LogisticModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    if n == 0:
        raise DataError("empty training set")
    if np.unique(y).size < 2:
        raise DataError("single-class input: need >= 2 classes to train")
    Y = np.zeros((n, N_CLASSES), dtype=np.float64)
    Y[np.arange(n), y] = 1.0

    W = np.zeros((N_CLASSES, d), dtype=np.float64)
    b = np.zeros(N_CLASSES, dtype=np.float64)
    loss = _loss(X, Y, W, b, l2)
    it = 0
    for it in range(1, max_iter + 1):
        P = softmax(X @ W.T + b)
        D = (P - Y) / n
        grad_w = D.T @ X + l2 * W
        grad_b = D.sum(axis=0)
        gnorm_sq = float((grad_w * grad_w).sum() + (grad_b * grad_b).sum())
        if gnorm_sq ** 0.5 < tol:
            it -= 1
            break
        step = 1.0
        while step >= _MIN_STEP:
            cand_loss = _loss(
                X, Y, W - step * grad_w, b - step * grad_b, l2
            )
            if cand_loss <= loss - _ARMIJO_C * step * gnorm_sq:
                break
            step *= 0.5
        if step < _MIN_STEP:
            break
        if cand_loss > loss + 1e-12:
            raise AssertionError("logistic loss increased during descent")
        W = W - step * grad_w
        b = b - step * grad_b
        loss = cand_loss
    return LogisticModel(weights=W, bias=b, n_iter=it)
