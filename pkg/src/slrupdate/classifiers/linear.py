"""Linear classifiers trained by per-sample SGD.

Both models minimise

    (1/n) * sum_i s_i * loss(y_i * (w . x_i + b)) + (reg / 2) * ||w||^2

with labels mapped to -1/+1, ``s_i`` the weight of sample i's class and the
bias left unregularised.  ``loss`` is the hinge loss for the SVM and the
logistic loss for logistic regression.  Step size at update t is
``1 / (reg * (t0 + t))`` with ``t0 = max(1, 1 / reg)``, so the first step
never exceeds 1.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

HINGE = "hinge"
LOG = "log"


def _signed(y) -> np.ndarray:
    return np.where(np.asarray(y) > 0, 1.0, -1.0)


def _loss_and_dmargin(margin: np.ndarray, loss: str) -> tuple[np.ndarray, np.ndarray]:
    # Returns loss(m) and d loss / d m.
    if loss == HINGE:
        value = np.maximum(0.0, 1.0 - margin)
        deriv = np.where(margin < 1.0, -1.0, 0.0)
    elif loss == LOG:
        value = np.logaddexp(0.0, -margin)
        deriv = -np.exp(-np.logaddexp(0.0, margin))  # -sigmoid(-m)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return value, deriv


def objective(w, b, X, y, sample_weight, reg: float, loss: str) -> float:
    ys = _signed(y)
    margin = ys * (X @ w + b)
    value, _ = _loss_and_dmargin(margin, loss)
    return float(np.mean(sample_weight * value) + 0.5 * reg * np.dot(w, w))


def gradient(w, b, X, y, sample_weight, reg: float, loss: str) -> tuple[np.ndarray, float]:
    """Gradient of :func:`objective` (a subgradient for the hinge loss)."""
    ys = _signed(y)
    margin = ys * (X @ w + b)
    _, deriv = _loss_and_dmargin(margin, loss)
    coef = sample_weight * deriv * ys / ys.size
    gw = X.T @ coef + reg * w
    return np.asarray(gw, dtype=np.float64).ravel(), float(coef.sum())


def sgd_fit(X, y, sample_weight, reg: float, loss: str, epochs: int, seed: int) -> tuple[np.ndarray, float]:
    """Plain per-sample SGD with epoch-wise shuffling.

    ``w`` is kept as ``scale * v`` so the L2 shrink is O(1) per step and the
    loss step only touches the sample's nonzero features.
    """
    X = sp.csr_matrix(X, dtype=np.float64)
    n, d = X.shape
    ys = _signed(y)
    sw = np.asarray(sample_weight, dtype=np.float64)
    indptr, indices, data = X.indptr, X.indices, X.data
    v = np.zeros(d)
    scale = 1.0
    b = 0.0
    t0 = max(1.0, 1.0 / reg)
    t = 0
    rng = np.random.default_rng(seed)
    hinge = loss == HINGE
    for _ in range(epochs):
        for i in rng.permutation(n):
            eta = 1.0 / (reg * (t0 + t))
            t += 1
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            vals = data[lo:hi]
            f = scale * float(np.dot(v[idx], vals)) + b
            m = ys[i] * f
            if hinge:
                dm = -1.0 if m < 1.0 else 0.0
            else:
                if m > 0.0:
                    e = math.exp(-m)
                    dm = -e / (1.0 + e)
                else:
                    dm = -1.0 / (1.0 + math.exp(m))
            shrink = 1.0 - eta * reg
            if shrink <= 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if dm != 0.0:
                step = eta * sw[i] * dm * ys[i]
                v[idx] -= (step / scale) * vals
                b -= step
            if scale < 1e-9:
                v *= scale
                scale = 1.0
    return v * scale, b


def fit_linear_svm(X, y, sample_weight, alpha: float, epochs: int, seed: int):
    return sgd_fit(X, y, sample_weight, alpha, HINGE, epochs, seed)


def fit_logistic(X, y, sample_weight, c: float, epochs: int, seed: int):
    n = X.shape[0]
    return sgd_fit(X, y, sample_weight, 1.0 / (c * n), LOG, epochs, seed)
