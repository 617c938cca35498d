"""The discovery engine: residual invariance testing over all covariate subsets.

For a chosen target, every covariate gets its own environment partition (a
fitted tree over that covariate).  Every subset of covariates is regressed
against the target and its residuals are tested for equal mean (Welch t) and
equal variance (F) between each environment and its complement, Bonferroni
corrected per family and combined as twice the minimum.  A covariate is a
causal parent candidate when it appears in every accepted subset under its own
partition.  The capped variant repeats this inside every size-``cap`` pool of
covariates and keeps covariates selected in a large enough fraction of pools.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .envgen import EnvironmentPartition, build_partition, default_min_leaf
from .regress import ols
from .sem import Dataset
from .stats import f_test_from_moments, welch_t_from_moments

__all__ = [
    "SubsetTestResult",
    "PartitionRecord",
    "DiscoveryResult",
    "invariance_p",
    "discover_v1",
    "discover_v2",
]


@dataclass(frozen=True)
class SubsetTestResult:
    """Invariance verdict for one covariate subset under one partition."""

    subset: tuple[str, ...]
    p_mean: float
    p_var: float
    p_combined: float
    accepted: bool


@dataclass
class PartitionRecord:
    """Everything that happened for one covariate's environment partition."""

    covariate: str
    usable: bool = False
    partition: EnvironmentPartition | None = None
    results: list[SubsetTestResult] = field(default_factory=list)
    accepted_subsets: list[tuple[str, ...]] = field(default_factory=list)
    intersection: tuple[str, ...] = ()
    warnings: list[str] = field(default_factory=list)


@dataclass
class DiscoveryResult:
    target: str
    method: str
    alpha: float
    k_envs: int
    parents: tuple[str, ...]
    per_partition: dict[str, PartitionRecord]
    alpha_vote: float | None = None
    votes: dict[str, tuple[int, int]] | None = None
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self, max_report_subsets: int = 4096) -> dict:
        """JSON-ready form; per-subset diagnostics capped at ``max_report_subsets``."""
        partitions = {}
        for cov, rec in self.per_partition.items():
            truncated = len(rec.results) > max_report_subsets
            partitions[cov] = {
                "usable": rec.usable,
                "partition": rec.partition.to_dict() if rec.partition is not None else None,
                "intersection": list(rec.intersection),
                "accepted_subsets": [list(s) for s in rec.accepted_subsets[:max_report_subsets]],
                "n_subsets_tested": len(rec.results),
                "subset_tests": [
                    {
                        "subset": list(r.subset),
                        "p_mean": r.p_mean,
                        "p_var": r.p_var,
                        "p_combined": r.p_combined,
                        "accepted": r.accepted,
                    }
                    for r in rec.results[:max_report_subsets]
                ],
                "truncated": truncated,
                "warnings": rec.warnings,
            }
        out = {
            "target": self.target,
            "method": self.method,
            "alpha": self.alpha,
            "k_envs": self.k_envs,
            "parents": list(self.parents),
            "per_partition": partitions,
            "warnings": self.warnings,
            "notes": self.notes,
        }
        if self.votes is not None:
            out["alpha_vote"] = self.alpha_vote
            out["votes"] = {
                cov: {"selected": sel, "eligible": elig}
                for cov, (sel, elig) in self.votes.items()
            }
        return out


# ----------------------------------------------------------------------
# Invariance testing


def _batch_invariance(R, R2, total_sum, total_sq, labels, k):
    """Mean- and variance-invariance p-values for every residual column.

    ``R`` is n x m (one column per subset), ``R2`` its elementwise square,
    ``total_sum``/``total_sq`` the column totals.  Each environment is tested
    one-vs-rest; the k tests per family are Bonferroni combined.
    Returns (p_mean, p_var) of length m.
    """
    n = R.shape[0]
    indicator = np.empty((k, n))
    for e in range(k):
        indicator[e] = labels == (e + 1)
    counts = indicator.sum(axis=1)
    if np.any(counts < 2):
        bad = int(np.argmin(counts)) + 1
        raise ValueError(f"environment {bad} has fewer than 2 samples")

    sums_in = indicator @ R
    sq_in = indicator @ R2
    n_in = counts[:, None]
    n_out = float(n) - n_in
    sums_out = total_sum[None, :] - sums_in
    sq_out = total_sq[None, :] - sq_in

    mean_in = sums_in / n_in
    mean_out = sums_out / n_out
    var_in = np.clip((sq_in - sums_in**2 / n_in) / (n_in - 1.0), 0.0, None)
    var_out = np.clip((sq_out - sums_out**2 / n_out) / (n_out - 1.0), 0.0, None)

    _, p_t = welch_t_from_moments(mean_in, var_in, n_in, mean_out, var_out, n_out)
    _, p_f = f_test_from_moments(var_in, n_in, var_out, n_out)
    p_mean = np.minimum(1.0, k * p_t.min(axis=0))
    p_var = np.minimum(1.0, k * p_f.min(axis=0))
    return p_mean, p_var


def invariance_p(residuals, labels) -> tuple[float, float]:
    """Bonferroni-combined one-vs-rest mean and variance invariance p-values.

    ``labels`` assigns each residual to an environment 1..K; every environment
    needs at least 2 samples.
    """
    residuals = np.asarray(residuals, dtype=float).ravel()
    labels = np.asarray(labels, dtype=int).ravel()
    if len(residuals) != len(labels):
        raise ValueError("residuals and labels must have equal length")
    if len(labels) == 0 or labels.min() < 1:
        raise ValueError("labels must take values in 1..K")
    k = int(labels.max())
    if k < 2:
        raise ValueError("need at least 2 environments")
    R = residuals[:, None]
    R2 = R * R
    p_mean, p_var = _batch_invariance(R, R2, R.sum(axis=0), R2.sum(axis=0), labels, k)
    return float(p_mean[0]), float(p_var[0])


# ----------------------------------------------------------------------
# Subset machinery


def _enumerate_subsets(covariates, max_size=None):
    """All covariate subsets (as name tuples and bitmasks), sizes 0..max_size."""
    p = len(covariates)
    max_size = p if max_size is None else min(max_size, p)
    subsets, masks = [], []
    for size in range(max_size + 1):
        for combo in itertools.combinations(range(p), size):
            subsets.append(tuple(covariates[i] for i in combo))
            masks.append(sum(1 << i for i in combo))
    return subsets, masks


def _residual_matrix(dataset, target, subsets, workers):
    """OLS residuals of the target on every subset, one column per subset."""
    y = dataset.column(target)
    n = dataset.n
    columns = {name: dataset.column(name) for name in dataset.names}
    R = np.empty((n, len(subsets)))
    rank_flags = np.zeros(len(subsets), dtype=bool)
    # An exactly-determined target leaves ~1e-16 solver noise instead of
    # zeros; snap it so the perfectly-invariant degenerate convention applies.
    zero_tol = 1e-10 * max(1.0, float(np.max(np.abs(y))))

    def fill(i):
        subset = subsets[i]
        X = (
            np.column_stack([columns[c] for c in subset])
            if subset
            else np.empty((n, 0))
        )
        fit = ols(X, y, names=subset)
        resid = fit.residuals
        if np.max(np.abs(resid)) <= zero_tol:
            resid = np.zeros_like(resid)
        R[:, i] = resid
        rank_flags[i] = fit.rank_deficient

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(len(subsets))))
    else:
        for i in range(len(subsets)):
            fill(i)
    return R, rank_flags


def _split_masks(n, env_fit_frac):
    """Deterministic interleaved split into tree-fitting and testing rows.

    With ``env_fit_frac <= 0`` both masks cover everything (in-sample mode).
    The pattern has period 10, so the fraction is honored in 10% steps.
    """
    if env_fit_frac <= 0.0:
        everything = np.ones(n, dtype=bool)
        return everything, everything
    if env_fit_frac >= 1.0:
        raise ValueError("env_fit_frac must be below 1 to leave samples for testing")
    slots = min(max(int(round(10 * env_fit_frac)), 1), 9)
    fit = (np.arange(n) % 10) < slots
    return fit, ~fit


def _evaluate_partition(
    dataset, covariate, target, covariates, k_envs, min_leaf, alpha_shift,
    subsets, masks, R_test, R2_test, total_sum, total_sq, alpha, fit_mask, test_mask,
) -> PartitionRecord:
    """Build one covariate's partition and test every subset under it.

    The tree is grown on the fit rows only; the invariance tests run on the
    residuals of the test rows, so the split selection cannot leak into them.
    """
    rec = PartitionRecord(covariate=covariate)
    fit_min_leaf = max(2, int(min_leaf * fit_mask.mean()))
    try:
        part = build_partition(
            dataset, covariate, target, k_envs, fit_min_leaf, alpha_shift,
            fit_mask=None if fit_mask.all() else fit_mask,
        )
    except ValueError as exc:
        rec.warnings.append(f"partition for {covariate!r} skipped: {exc}")
        return rec
    rec.partition = part
    if part.tree.degenerate:
        rec.warnings.append(f"partition for {covariate!r} degenerate: no admissible split")
        return rec
    if part.tree.capped:
        rec.warnings.append(
            f"partition for {covariate!r} capped at {part.tree.leaf_count} environments"
        )
    rec.warnings.extend(part.shift_warnings())

    try:
        p_mean, p_var = _batch_invariance(
            R_test, R2_test, total_sum, total_sq, part.labels[test_mask],
            part.tree.leaf_count,
        )
    except ValueError as exc:
        rec.warnings.append(f"invariance tests for {covariate!r} skipped: {exc}")
        return rec

    p_comb = np.minimum(1.0, 2.0 * np.minimum(p_mean, p_var))
    accepted = p_comb >= alpha
    rec.results = [
        SubsetTestResult(
            subset=subsets[i],
            p_mean=float(p_mean[i]),
            p_var=float(p_var[i]),
            p_combined=float(p_comb[i]),
            accepted=bool(accepted[i]),
        )
        for i in range(len(subsets))
    ]
    accepted_idx = np.nonzero(accepted)[0]
    rec.accepted_subsets = [subsets[i] for i in accepted_idx]
    if len(accepted_idx) == 0:
        inter_mask = 0  # empty family: conservative empty intersection
    else:
        inter_mask = masks[accepted_idx[0]]
        for i in accepted_idx[1:]:
            inter_mask &= masks[i]
    rec.intersection = tuple(
        c for j, c in enumerate(covariates) if inter_mask & (1 << j)
    )
    rec.usable = True
    return rec


def _prepare(dataset, target, k_envs, min_leaf):
    if target not in dataset.names:
        raise KeyError(f"no column named {target!r}")
    covariates = [c for c in dataset.names if c != target]
    if not covariates:
        raise ValueError("dataset needs at least one covariate besides the target")
    if min_leaf is None:
        min_leaf = default_min_leaf(dataset.n, k_envs)
    return covariates, min_leaf


def discover_v1(
    dataset: Dataset,
    target: str,
    k_envs: int = 3,
    alpha: float = 0.05,
    min_leaf: int | None = None,
    alpha_shift: float = 0.05,
    env_fit_frac: float = 0.3,
    workers: int | None = None,
) -> DiscoveryResult:
    """Full-enumeration discovery: 2^(p-1) subsets per covariate partition.

    A covariate is reported as a parent when it lies in the intersection of
    all subsets accepted under its own environment partition.  By default the
    trees are grown on an interleaved 30% of the rows and the invariance tests
    use the remaining 70%, which keeps the tests honest about the
    data-dependent choice of environments; ``env_fit_frac=0`` disables the
    split and uses every row for both.
    """
    covariates, min_leaf = _prepare(dataset, target, k_envs, min_leaf)
    subsets, masks = _enumerate_subsets(covariates)
    fit_mask, test_mask = _split_masks(dataset.n, env_fit_frac)
    R, rank_flags = _residual_matrix(dataset, target, subsets, workers)
    R_test = R[test_mask]
    R2_test = R_test * R_test
    total_sum = R_test.sum(axis=0)
    total_sq = R2_test.sum(axis=0)

    records: dict[str, PartitionRecord] = {}
    warnings: list[str] = []
    parents = []
    for cov in covariates:
        rec = _evaluate_partition(
            dataset, cov, target, covariates, k_envs, min_leaf, alpha_shift,
            subsets, masks, R_test, R2_test, total_sum, total_sq, alpha,
            fit_mask, test_mask,
        )
        records[cov] = rec
        warnings.extend(rec.warnings)
        if rec.usable and cov in rec.intersection:
            parents.append(cov)

    notes = []
    if rank_flags.any():
        notes.append(
            f"{int(rank_flags.sum())} of {len(subsets)} subsets had rank-deficient designs"
        )
    return DiscoveryResult(
        target=target,
        method="v1",
        alpha=alpha,
        k_envs=k_envs,
        parents=tuple(parents),
        per_partition=records,
        warnings=warnings,
        notes=notes,
    )


def _iter_submasks(mask):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def discover_v2(
    dataset: Dataset,
    target: str,
    k_envs: int = 3,
    alpha: float = 0.05,
    alpha_vote: float = 0.1,
    cap: int = 5,
    min_leaf: int | None = None,
    alpha_shift: float = 0.05,
    env_fit_frac: float = 0.3,
    workers: int | None = None,
) -> DiscoveryResult:
    """Capped-pool discovery with voting, for datasets with many covariates.

    Every size-``cap`` pool of covariates is searched exhaustively as in the
    full method; a covariate becomes a parent when it was selected in at least
    a ``1 - alpha_vote`` fraction of the pools containing it.  Pools where a
    covariate's partition failed do not count toward its eligibility.  With at
    most ``cap`` covariates there is a single pool and the result reduces to
    the full method plus vote bookkeeping.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    covariates, min_leaf = _prepare(dataset, target, k_envs, min_leaf)
    p = len(covariates)

    if p <= cap:
        base = discover_v1(
            dataset, target, k_envs=k_envs, alpha=alpha, min_leaf=min_leaf,
            alpha_shift=alpha_shift, env_fit_frac=env_fit_frac, workers=workers,
        )
        votes = {c: (1 if c in base.parents else 0, 1) for c in covariates}
        return DiscoveryResult(
            target=target,
            method="v2",
            alpha=alpha,
            k_envs=k_envs,
            parents=base.parents,
            per_partition=base.per_partition,
            alpha_vote=alpha_vote,
            votes=votes,
            warnings=base.warnings,
            notes=base.notes
            + [f"covariate count {p} <= cap {cap}: single pool, full-method semantics"],
        )

    subsets, masks = _enumerate_subsets(covariates, max_size=cap)
    fit_mask, test_mask = _split_masks(dataset.n, env_fit_frac)
    R, rank_flags = _residual_matrix(dataset, target, subsets, workers)
    R_test = R[test_mask]
    R2_test = R_test * R_test
    total_sum = R_test.sum(axis=0)
    total_sq = R2_test.sum(axis=0)

    records: dict[str, PartitionRecord] = {}
    warnings: list[str] = []
    accepted_by_mask: dict[str, dict[int, bool]] = {}
    for cov in covariates:
        rec = _evaluate_partition(
            dataset, cov, target, covariates, k_envs, min_leaf, alpha_shift,
            subsets, masks, R_test, R2_test, total_sum, total_sq, alpha,
            fit_mask, test_mask,
        )
        records[cov] = rec
        warnings.extend(rec.warnings)
        if rec.usable:
            accepted_by_mask[cov] = {
                masks[i]: r.accepted for i, r in enumerate(rec.results)
            }

    eligible = dict.fromkeys(covariates, 0)
    selected = dict.fromkeys(covariates, 0)
    for pool in itertools.combinations(range(p), cap):
        pool_mask = sum(1 << i for i in pool)
        for i in pool:
            cov = covariates[i]
            flags = accepted_by_mask.get(cov)
            if flags is None:
                continue  # failed partition: pool not counted as eligible
            eligible[cov] += 1
            inter_mask = None
            for sub in _iter_submasks(pool_mask):
                if flags[sub]:
                    inter_mask = sub if inter_mask is None else inter_mask & sub
            if inter_mask is not None and inter_mask & (1 << i):
                selected[cov] += 1

    parents = tuple(
        cov
        for cov in covariates
        if eligible[cov] > 0
        and selected[cov] >= (1.0 - alpha_vote) * eligible[cov] - 1e-9
    )
    votes = {cov: (selected[cov], eligible[cov]) for cov in covariates}
    notes = []
    if rank_flags.any():
        notes.append(
            f"{int(rank_flags.sum())} of {len(subsets)} subsets had rank-deficient designs"
        )
    return DiscoveryResult(
        target=target,
        method="v2",
        alpha=alpha,
        k_envs=k_envs,
        parents=parents,
        per_partition=records,
        alpha_vote=alpha_vote,
        votes=votes,
        warnings=warnings,
        notes=notes,
    )
