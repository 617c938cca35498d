"""Environment generation: univariate decision trees whose leaves become environments.

For each covariate a single-feature tree is fitted against the target
(regression for continuous targets, classification otherwise) and grown
best-first until it has K leaves.  Every leaf is an interval of the covariate
(or a group of its levels), and the induced sample partition is the set of
environments used by the invariance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sem import Dataset
from .stats import TestReport, ks_two_sample

__all__ = [
    "TreeModel",
    "EnvironmentPartition",
    "PairShift",
    "fit_environment_tree",
    "assign",
    "check_shift",
    "build_partition",
    "default_min_leaf",
]


@dataclass(frozen=True)
class TreeModel:
    """A fitted univariate tree, stored as its split conditions.

    Numeric features use strictly increasing ``thresholds`` (value <= threshold
    routes left); categorical features use ``level_groups``, an ordered tuple
    of level sets, one per leaf.
    """

    mode: str  # "regression" or "classification"
    leaf_count: int
    requested_leaves: int
    thresholds: tuple[float, ...] = ()
    level_groups: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.level_groups is None:
            if list(self.thresholds) != sorted(set(self.thresholds)):
                raise ValueError("thresholds must be strictly increasing")
            if self.leaf_count != len(self.thresholds) + 1:
                raise ValueError("leaf_count must equal len(thresholds) + 1")
        elif self.leaf_count != len(self.level_groups):
            raise ValueError("leaf_count must equal the number of level groups")

    @property
    def capped(self) -> bool:
        """True when growth stopped before reaching the requested leaf count."""
        return self.leaf_count < self.requested_leaves

    @property
    def degenerate(self) -> bool:
        """True when no split was admissible at all."""
        return self.leaf_count < 2


@dataclass(frozen=True)
class PairShift:
    """KS shift check of one column between one pair of environments."""

    env_pair: tuple[int, int]
    column: str
    report: TestReport
    shifted: bool


@dataclass
class EnvironmentPartition:
    covariate: str
    labels: np.ndarray  # values in 1..K
    tree: TreeModel
    shift_checks: list[PairShift] = field(default_factory=list)

    @property
    def env_sizes(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.tree.leaf_count + 1)[1:].tolist()

    def shift_warnings(self) -> list[str]:
        """Human-readable notes for every check that failed to show a shift."""
        return [
            f"{self.covariate}: no {c.column} shift between environments "
            f"{c.env_pair[0]} and {c.env_pair[1]} (KS p={c.report.p:.4g})"
            for c in self.shift_checks
            if not c.shifted
        ]

    def to_dict(self) -> dict:
        tree = {
            "mode": self.tree.mode,
            "leaf_count": self.tree.leaf_count,
            "requested_leaves": self.tree.requested_leaves,
        }
        if self.tree.level_groups is None:
            tree["thresholds"] = list(self.tree.thresholds)
        else:
            tree["level_groups"] = [list(g) for g in self.tree.level_groups]
        return {
            "covariate": self.covariate,
            "tree": tree,
            "env_sizes": self.env_sizes,
            "shift_checks": [
                {
                    "environments": list(c.env_pair),
                    "column": c.column,
                    "statistic": c.report.statistic,
                    "p": c.report.p,
                    "shifted": c.shifted,
                }
                for c in self.shift_checks
            ],
        }


def default_min_leaf(n: int, k: int) -> int:
    """Leaf-size floor keeping per-environment tests powered: max(30, n/(10k))."""
    return max(30, n // (10 * k))


def _leaf_impurity_fn(mode: str, ys: np.ndarray):
    """Per-segment split scorer; returns (gains, candidate_positions) callables."""
    if mode == "regression":

        def scorer(seg_y: np.ndarray, cand: np.ndarray):
            m = len(seg_y)
            centered = seg_y - seg_y.mean()
            cs = np.concatenate([[0.0], np.cumsum(centered)])
            cs2 = np.concatenate([[0.0], np.cumsum(centered * centered)])
            total = cs2[m] - cs[m] ** 2 / m
            left_n = cand.astype(float)
            right_n = m - left_n
            sse_left = cs2[cand] - cs[cand] ** 2 / left_n
            sse_right = (cs2[m] - cs2[cand]) - (cs[m] - cs[cand]) ** 2 / right_n
            return total - sse_left - sse_right

        return scorer

    levels = np.unique(ys)

    def scorer(seg_y: np.ndarray, cand: np.ndarray):
        m = len(seg_y)
        left_n = cand.astype(float)
        right_n = m - left_n
        # n * Gini = n - sum_c count_c^2 / n, accumulated per class.
        sum_sq_left = np.zeros(len(cand))
        sum_sq_right = np.zeros(len(cand))
        sum_sq_total = 0.0
        for level in levels:
            counts = np.concatenate([[0.0], np.cumsum(seg_y == level)])
            sum_sq_left += counts[cand] ** 2
            sum_sq_right += (counts[m] - counts[cand]) ** 2
            sum_sq_total += counts[m] ** 2
        imp_total = m - sum_sq_total / m
        imp_left = left_n - sum_sq_left / left_n
        imp_right = right_n - sum_sq_right / right_n
        return imp_total - imp_left - imp_right

    return scorer


def _best_split(f, ys, lo, hi, min_leaf, scorer):
    """Best admissible split of the sorted segment [lo, hi), or None.

    Returns (gain, absolute_boundary) with the leftmost position among exact
    gain ties (argmax picks the first maximum).
    """
    seg_f = f[lo:hi]
    m = hi - lo
    cand = np.nonzero(seg_f[1:] != seg_f[:-1])[0] + 1
    cand = cand[(cand >= min_leaf) & (cand <= m - min_leaf)]
    if len(cand) == 0:
        return None
    gains = scorer(ys[lo:hi], cand)
    best = int(np.argmax(gains))
    if not gains[best] > 0.0:
        return None
    return float(gains[best]), lo + int(cand[best])


def _midpoint_threshold(left_value: float, right_value: float) -> float:
    thr = (left_value + right_value) / 2.0
    # Guard against the midpoint rounding up onto the right value, which
    # would route it left and break label reconstruction.
    if thr >= right_value:
        thr = left_value
    return thr


def _order_levels(x: np.ndarray, y: np.ndarray, mode: str) -> np.ndarray:
    """Levels of x ordered by the target statistic used for subset search.

    Regression orders by the mean of y per level; classification by the rate
    of the highest target level.  Ties fall back to level order.
    """
    levels = np.unique(x)
    if mode == "regression":
        stat = np.array([y[x == lv].mean() for lv in levels])
    else:
        positive = y.max()
        stat = np.array([np.mean(y[x == lv] == positive) for lv in levels])
    return levels[np.lexsort((levels, stat))]


def fit_environment_tree(
    x,
    y,
    k: int,
    y_kind: str,
    min_leaf: int,
    x_kind: str = "continuous",
    trace: list | None = None,
) -> TreeModel:
    """Grow a single-feature tree on (x, y) best-first until it has k leaves.

    Regression mode (continuous target) maximizes variance reduction;
    classification mode (binary or categorical target) maximizes Gini
    reduction.  Splits must leave at least ``min_leaf`` samples per side and
    strictly positive gain; if no admissible split remains early, the tree is
    returned with fewer leaves and flagged via ``capped``/``degenerate``.

    ``trace``, if given, collects one (leaf_interval, boundary, gain) entry per
    accepted split, in pick order, for audit against exhaustive search.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    n = len(x)
    if k < 2:
        raise ValueError(f"environment count must be >= 2, got {k}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    if n < k * min_leaf:
        raise ValueError(f"need at least k*min_leaf = {k * min_leaf} samples, got {n}")

    mode = "classification" if y_kind in ("binary", "categorical") else "regression"
    categorical_feature = x_kind == "categorical"
    if categorical_feature:
        ordered_levels = _order_levels(x, y, mode)
        ordinal_of = {lv: i for i, lv in enumerate(ordered_levels)}
        feature = np.array([ordinal_of[v] for v in x], dtype=float)
    else:
        feature = x
    if len(np.unique(feature)) < 2:
        raise ValueError("covariate has no split points")

    order = np.argsort(feature, kind="stable")
    f = feature[order]
    ys = y[order]
    scorer = _leaf_impurity_fn(mode, ys)

    # Best-first growth: leaves kept in left-to-right order; each carries its
    # best candidate split, and the globally best (leftmost on ties) is taken.
    leaves = [(0, n)]
    pending = {(0, n): _best_split(f, ys, 0, n, min_leaf, scorer)}
    boundaries: list[int] = []
    while len(leaves) < k:
        best_leaf = None
        best_gain = 0.0
        for leaf in leaves:
            cand = pending[leaf]
            if cand is not None and cand[0] > best_gain:
                best_gain, best_leaf = cand[0], leaf
        if best_leaf is None:
            break
        lo, hi = best_leaf
        gain, pos = pending[best_leaf]
        if trace is not None:
            trace.append(((lo, hi), pos, gain))
        boundaries.append(pos)
        i = leaves.index(best_leaf)
        left, right = (lo, pos), (pos, hi)
        leaves[i : i + 1] = [left, right]
        del pending[best_leaf]
        pending[left] = _best_split(f, ys, *left, min_leaf, scorer)
        pending[right] = _best_split(f, ys, *right, min_leaf, scorer)

    boundaries.sort()
    if categorical_feature:
        groups = []
        cuts = [0] + boundaries + [n]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            ordinals = np.unique(f[lo:hi]).astype(int)
            groups.append(tuple(float(ordered_levels[o]) for o in ordinals))
        return TreeModel(
            mode=mode,
            leaf_count=len(groups),
            requested_leaves=k,
            level_groups=tuple(groups),
        )
    thresholds = tuple(_midpoint_threshold(f[pos - 1], f[pos]) for pos in boundaries)
    return TreeModel(
        mode=mode,
        leaf_count=len(thresholds) + 1,
        requested_leaves=k,
        thresholds=thresholds,
    )


def assign(tree: TreeModel, x) -> np.ndarray:
    """Leaf index (1..K) per sample; ties at a threshold route left.

    Categorical levels not seen at fit time route to the group of the
    numerically nearest known level (lower level on ties).
    """
    x = np.asarray(x, dtype=float).ravel()
    if tree.level_groups is not None:
        group_of = {
            level: g + 1 for g, levels in enumerate(tree.level_groups) for level in levels
        }
        known = sorted(group_of)
        labels = np.empty(len(x), dtype=int)
        for i, v in enumerate(x):
            key = v if v in group_of else min(known, key=lambda lv: (abs(lv - v), lv))
            labels[i] = group_of[key]
        return labels
    return np.searchsorted(np.asarray(tree.thresholds), x, side="left").astype(int) + 1


def check_shift(
    dataset: Dataset,
    covariate: str,
    target: str,
    partition: EnvironmentPartition,
    alpha_shift: float = 0.05,
) -> list[PairShift]:
    """Pairwise KS shift checks between environments.

    For every unordered environment pair the covariate column and the target
    column are compared.  A check with p >= alpha_shift indicates that marginal
    did not shift; such checks surface as warnings but never stop discovery.
    The covariate marginal shifts by construction (leaves partition its
    support), so in practice warnings concern the target.
    """
    k = partition.tree.leaf_count
    labels = partition.labels
    sizes = np.bincount(labels, minlength=k + 1)[1:]
    if (sizes < 1).any():
        empty = int(np.argmin(sizes)) + 1
        raise ValueError(f"environment {empty} has no samples")
    checks: list[PairShift] = []
    for j in range(1, k + 1):
        in_j = labels == j
        for m in range(j + 1, k + 1):
            in_m = labels == m
            for column in (covariate, target):
                col = dataset.column(column)
                report = ks_two_sample(col[in_j], col[in_m])
                checks.append(
                    PairShift(
                        env_pair=(j, m),
                        column=column,
                        report=report,
                        shifted=report.p < alpha_shift,
                    )
                )
    return checks


def build_partition(
    dataset: Dataset,
    covariate: str,
    target: str,
    k: int,
    min_leaf: int | None = None,
    alpha_shift: float = 0.05,
    fit_mask: np.ndarray | None = None,
) -> EnvironmentPartition:
    """Fit the tree for one covariate, assign labels, and run shift checks.

    When ``fit_mask`` is given, only those rows train the tree; the labels
    still cover every sample.  Discovery uses this to keep the rows that feed
    the invariance tests out of the split selection.
    """
    x = dataset.column(covariate)
    y = dataset.column(target)
    if min_leaf is None:
        min_leaf = default_min_leaf(dataset.n, k)
    if fit_mask is None:
        x_fit, y_fit = x, y
    else:
        x_fit, y_fit = x[fit_mask], y[fit_mask]
    tree = fit_environment_tree(
        x_fit, y_fit, k, dataset.kinds[target], min_leaf, x_kind=dataset.kinds[covariate]
    )
    partition = EnvironmentPartition(covariate=covariate, labels=assign(tree, x), tree=tree)
    if not tree.degenerate:
        partition.shift_checks = check_shift(dataset, covariate, target, partition, alpha_shift)
    return partition
