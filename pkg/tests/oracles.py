"""Brute-force reference implementations used as oracles across test modules."""

import numpy as np


def normal_equations_ols(X, y):
    """OLS with intercept solved directly from the normal equations."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    design = np.column_stack([np.ones(len(y)), X])
    beta = np.linalg.solve(design.T @ design, design.T @ y)
    return float(beta[0]), beta[1:]


def naive_impurity(seg, mode, classes=None):
    seg = np.asarray(seg, dtype=float)
    if mode == "regression":
        return float(((seg - seg.mean()) ** 2).sum())
    n = len(seg)
    return float(n - sum(float(np.sum(seg == c)) ** 2 for c in classes) / n)


def greedy_tree_oracle(x, y, k, min_leaf, mode):
    """Exhaustive-search best-first tree growth on a single feature.

    Returns (steps, leaves): steps is a list of (gain, boundary) in pick
    order, leaves the final list of [lo, hi) intervals over the sorted order.
    Boundaries are indices into the sorted-by-x arrangement.  Tie-break is
    leftmost leaf, then leftmost boundary (strict > when scanning).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x, kind="stable")
    f = x[order]
    ys = y[order]
    classes = np.unique(ys)
    leaves = [(0, len(f))]
    steps = []
    while len(leaves) < k:
        best = None  # (gain, leaf_index, boundary)
        for li, (lo, hi) in enumerate(leaves):
            parent = naive_impurity(ys[lo:hi], mode, classes)
            for pos in range(lo + min_leaf, hi - min_leaf + 1):
                if f[pos - 1] == f[pos]:
                    continue
                gain = (
                    parent
                    - naive_impurity(ys[lo:pos], mode, classes)
                    - naive_impurity(ys[pos:hi], mode, classes)
                )
                if best is None or gain > best[0]:
                    best = (gain, li, pos)
        if best is None or best[0] <= 0.0:
            break
        gain, li, pos = best
        lo, hi = leaves[li]
        leaves[li : li + 1] = [(lo, pos), (pos, hi)]
        steps.append((gain, pos))
    return steps, leaves


def max_gain_anywhere(f_sorted, ys_sorted, intervals, min_leaf, mode, classes):
    """Largest admissible split gain over a set of [lo, hi) intervals."""
    best = 0.0
    for lo, hi in intervals:
        parent = naive_impurity(ys_sorted[lo:hi], mode, classes)
        for pos in range(lo + min_leaf, hi - min_leaf + 1):
            if f_sorted[pos - 1] == f_sorted[pos]:
                continue
            gain = (
                parent
                - naive_impurity(ys_sorted[lo:pos], mode, classes)
                - naive_impurity(ys_sorted[pos:hi], mode, classes)
            )
            best = max(best, gain)
    return best
