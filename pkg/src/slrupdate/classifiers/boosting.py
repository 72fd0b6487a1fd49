"""Second-order gradient boosting with exact greedy splits.

A node holding rows with gradient sum G and hessian sum H scores a split into
(L, R) by

    gain = 1/2 * [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)]

and the split is kept only when ``gain - gamma > 0``.  Leaves output
``-learning_rate * G / (H + lam)``.  Rows go left when ``x < threshold``;
thresholds are midpoints between consecutive distinct feature values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def split_gain(g_left, h_left, g_right, h_right, lam: float):
    g, h = g_left + g_right, h_left + h_right
    return 0.5 * (g_left ** 2 / (h_left + lam) + g_right ** 2 / (h_right + lam) - g ** 2 / (h + lam))


@dataclass
class Tree:
    # Parallel arrays, one slot per node; node 0 is the root.  Leaves have
    # feature == -1 and children == -1.
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    gain: list[float] = field(default_factory=list)

    def _add(self) -> int:
        for arr, default in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                             (self.right, -1), (self.value, 0.0), (self.gain, 0.0)):
            arr.append(default)
        return len(self.feature) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def internal_nodes(self) -> list[int]:
        return [i for i in range(self.n_nodes) if not self.is_leaf(i)]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of a dense matrix."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            nf = feature[node[rows]]
            go_left = X[rows, nf] < threshold[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
            active = feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.value)[self.apply(X)]

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in ("feature", "threshold", "left", "right", "value", "gain")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(**{k: list(d[k]) for k in ("feature", "threshold", "left", "right", "value", "gain")})


def best_split(X: np.ndarray, g: np.ndarray, h: np.ndarray, lam: float):
    """Exact greedy search over every feature and every distinct-value gap.

    Returns ``(gain, feature, threshold)`` or None if no row partition exists.
    """
    m, d = X.shape
    if m < 2 or d == 0:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    gl = np.cumsum(g[order], axis=0)[:-1]
    hl = np.cumsum(h[order], axis=0)[:-1]
    g_tot, h_tot = g.sum(), h.sum()
    gains = split_gain(gl, hl, g_tot - gl, h_tot - hl, lam)
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    gains = np.where(valid, gains, -np.inf)
    pos, feat = np.unravel_index(int(np.argmax(gains)), gains.shape)
    threshold = (xs[pos, feat] + xs[pos + 1, feat]) / 2.0
    return float(gains[pos, feat]), int(feat), float(threshold)


def grow_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, *, lam: float, gamma: float,
              max_depth: int, learning_rate: float) -> Tree:
    tree = Tree()
    root = tree._add()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        gs, hs = g[rows], h[rows]
        split = best_split(X[rows], gs, hs, lam) if depth < max_depth else None
        if split is None or split[0] - gamma <= 0:
            tree.value[node] = float(-learning_rate * gs.sum() / (hs.sum() + lam))
            continue
        gain, feat, thr = split
        tree.feature[node] = feat
        tree.threshold[node] = thr
        tree.gain[node] = gain
        go_left = X[rows, feat] < thr
        li, ri = tree._add(), tree._add()
        tree.left[node], tree.right[node] = li, ri
        # Right pushed first so the left subtree is numbered first.
        stack.append((ri, rows[~go_left], depth + 1))
        stack.append((li, rows[go_left], depth + 1))
    return tree


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_grad_hess(margin: np.ndarray, y: np.ndarray, weight: np.ndarray):
    p = _sigmoid(margin)
    return weight * (p - y), weight * p * (1.0 - p)


def fit_gbt(X, y, *, scale_pos_weight: float, gamma: float, subsample: float, n_trees: int,
            max_depth: int, learning_rate: float, lam: float, seed: int) -> tuple[float, list[Tree]]:
    """Returns ``(base_score, trees)``; the model score is base + sum of tree outputs."""
    Xd = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    weight = np.where(y > 0, scale_pos_weight, 1.0)
    base = float(np.log((weight * y).sum() / (weight * (1 - y)).sum()))
    margin = np.full(n, base)
    rng = np.random.default_rng(seed)
    n_rows = max(1, math.ceil(subsample * n))
    trees = []
    for _ in range(n_trees):
        rows = np.sort(rng.choice(n, size=n_rows, replace=False)) if n_rows < n else np.arange(n)
        g, h = logistic_grad_hess(margin, y, weight)
        tree = grow_tree(Xd[rows], g[rows], h[rows], lam=lam, gamma=gamma,
                         max_depth=max_depth, learning_rate=learning_rate)
        trees.append(tree)
        margin = margin + tree.predict(Xd)
    return base, trees


def gbt_scores(X, base: float, trees: list[Tree]) -> np.ndarray:
    Xd = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
    out = np.full(Xd.shape[0], base)
    for t in trees:
        out += t.predict(Xd)
    return out
