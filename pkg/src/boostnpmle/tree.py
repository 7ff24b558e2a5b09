"""Greedy weighted regression tree on a single sorted feature."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

MAX_DEPTH = 30


def best_split(w, g, minbucket=1):
    """Best split of a sorted node by weighted SSE reduction.

    Returns ``(k, gain)`` meaning left = ``[:k+1]``, right = ``[k+1:]``,
    or ``(None, 0.0)`` if no split with at least ``minbucket`` points per
    side strictly reduces the error. Ties go to the leftmost position.
    """
    n = w.size
    if n < 2 * max(minbucket, 1):
        return None, 0.0
    wg = w * g
    lw = np.cumsum(w)[:-1]
    lwg = np.cumsum(wg)[:-1]
    # suffix sums directly, not total minus prefix, so they stay positive
    rw = np.cumsum(w[::-1])[::-1][1:]
    rwg = np.cumsum(wg[::-1])[::-1][1:]
    tw = w.sum()
    twg = wg.sum()
    # SSE(node) - SSE(left) - SSE(right), with the sum(w g^2) terms cancelling
    gain = lwg**2 / lw + rwg**2 / rw - twg**2 / tw
    if minbucket > 1:
        gain[: minbucket - 1] = -np.inf
        gain[n - minbucket:] = -np.inf
    k = int(np.argmax(gain))
    # round-off "gains" on constant responses are not splits
    if not gain[k] > 1e-14 * np.dot(w, g * g):
        return None, 0.0
    return k, float(gain[k])


class RegressionTree:
    """Piecewise-constant predictor: ``values[i]`` on ``(thresholds[i-1], thresholds[i]]``."""

    kind = "cart"

    def __init__(self, thresholds, values, root=None):
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self.root = root

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        # points beyond the outer thresholds fall into the end leaves
        return self.values[np.searchsorted(self.thresholds, x, side="left")]

    def __repr__(self):
        return f"RegressionTree(leaves={self.values.size})"


def fit_cart(x, w, g, minsplit=30, minbucket=None, max_depth=MAX_DEPTH) -> RegressionTree:
    """Grow a tree greedily; leaves predict the weighted mean response.

    A node with at least ``minsplit`` knots is split at the knot midpoint
    that most reduces weighted squared error, provided both children keep
    ``minbucket`` knots (default ``round(minsplit / 3)``, as in rpart).
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if not (x.shape == w.shape == g.shape) or x.ndim != 1 or x.size < 1:
        raise InvalidInputError("x, w, g must be non-empty 1-d arrays of equal length")
    if np.any(w <= 0):
        raise InvalidInputError("weights must be positive")
    if x.size > 1 and not np.all(np.diff(x) > 0):
        raise InvalidInputError("knots must be strictly increasing")

    if minbucket is None:
        minbucket = max(1, int(round(minsplit / 3)))
    thresholds = []
    leaves = []
    root = None

    def grow(lo, hi, depth):
        nonlocal root
        k = None
        if hi - lo >= minsplit and depth < max_depth:
            k, _ = best_split(w[lo:hi], g[lo:hi], minbucket)
        if k is None:
            leaves.append(np.dot(w[lo:hi], g[lo:hi]) / w[lo:hi].sum())
            return
        cut = lo + k + 1
        t = 0.5 * (x[cut - 1] + x[cut])
        if depth == 0:
            root = t
        grow(lo, cut, depth + 1)
        thresholds.append(t)
        grow(cut, hi, depth + 1)

    grow(0, x.size, 0)
    return RegressionTree(thresholds, leaves, root)
