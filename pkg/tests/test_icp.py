import json
from math import comb

import numpy as np
import pytest

from treeicp.icp import discover_v1, discover_v2, invariance_p
from treeicp.sem import (
    Dataset,
    Equation,
    GaussianNoise,
    SemSpec,
    builtin_specs,
    ground_truth,
    simulate,
)

SPECS = {s.name: s for s in builtin_specs()}


def null_spec(names=("X1", "X2", "X3", "Y")):
    return SemSpec(
        name="nullcase",
        equations=tuple(Equation(v, (), GaussianNoise(0.0, 1.0)) for v in names),
        kinds={v: "continuous" for v in names},
    )


class TestInvarianceP:
    def test_null_calibration(self):
        ok = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            residuals = rng.normal(0.0, 1.0, 900)
            labels = rng.integers(1, 4, 900)
            p_mean, _ = invariance_p(residuals, labels)
            ok += p_mean >= 0.05
        assert ok >= 180

    def test_shifted_environment_detected(self):
        rng = np.random.default_rng(0)
        residuals = rng.normal(0.0, 1.0, 900)
        labels = rng.integers(1, 4, 900)
        residuals[labels == 1] += 5.0
        p_mean, _ = invariance_p(residuals, labels)
        assert p_mean < 1e-6

    def test_environment_relabeling_invariance(self):
        rng = np.random.default_rng(1)
        residuals = rng.normal(0.0, 1.0, 300)
        labels = rng.integers(1, 4, 300)
        swapped = np.select([labels == 1, labels == 2, labels == 3], [3, 2, 1])
        assert invariance_p(residuals, labels) == invariance_p(residuals, swapped)

    def test_small_environment_rejected(self):
        with pytest.raises(ValueError, match="fewer than 2"):
            invariance_p(np.arange(10.0), np.array([1] * 9 + [2]))
        with pytest.raises(ValueError, match="at least 2 environments"):
            invariance_p(np.arange(10.0), np.ones(10, dtype=int))


class TestDiscoverV1:
    def test_dataset1_target_y(self):
        # True parents are always found; everything reported is a true
        # neighbour of Y (its child X3 is indistinguishable from a parent).
        truth_adjacent = {"X1", "X2", "X3"}
        for seed in range(5):
            ds = simulate(SPECS["dataset1"], 1000, seed)
            r = discover_v1(ds, "Y")
            assert {"X1", "X2"} <= set(r.parents) <= truth_adjacent

    def test_pure_noise_target_mostly_empty(self):
        spec = null_spec()
        empty = sum(
            1 for seed in range(20) if not discover_v1(simulate(spec, 1000, seed), "Y").parents
        )
        assert empty >= 17

    def test_perfect_copy_single_covariate(self):
        rng = np.random.default_rng(0)
        y = rng.normal(0.0, 1.0, 400)
        ds = Dataset(
            columns=(("X1", "continuous"), ("Y", "continuous")),
            values=np.column_stack([y, y]),
        )
        r = discover_v1(ds, "Y", min_leaf=20)
        assert r.parents == ("X1",)
        by_subset = {t.subset: t for t in r.per_partition["X1"].results}
        assert by_subset[("X1",)].accepted
        assert by_subset[("X1",)].p_combined == 1.0
        assert not by_subset[()].accepted

    def test_subset_enumeration_complete(self):
        ds = simulate(SPECS["dataset3"], 1000, 0)
        r = discover_v1(ds, "Y")
        for rec in r.per_partition.values():
            assert len(rec.results) == 2 ** 5
            assert len({t.subset for t in rec.results}) == 2 ** 5

    def test_constant_covariate_skipped_with_warning(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0.0, 1.0, 500)
        y = x + rng.normal(0.0, 0.3, 500)
        const = np.full(500, 7.0)
        ds = Dataset(
            columns=(("X1", "continuous"), ("C", "continuous"), ("Y", "continuous")),
            values=np.column_stack([x, const, y]),
        )
        r = discover_v1(ds, "Y", min_leaf=20)
        assert "C" not in r.parents
        assert not r.per_partition["C"].usable
        assert any("no split points" in w for w in r.warnings)
        assert "X1" in r.parents

    def test_combined_p_matches_invariants(self):
        ds = simulate(SPECS["dataset1"], 500, 1)
        r = discover_v1(ds, "Y")
        for rec in r.per_partition.values():
            for t in rec.results:
                assert t.p_combined == pytest.approx(
                    min(1.0, 2.0 * min(t.p_mean, t.p_var)), abs=1e-15
                )
                assert t.accepted == (t.p_combined >= r.alpha)

    def test_empty_set_acceptance_forces_empty_intersection(self):
        found = 0
        for seed in range(10):
            ds = simulate(null_spec(), 1000, seed)
            r = discover_v1(ds, "Y")
            for rec in r.per_partition.values():
                if () in rec.accepted_subsets:
                    found += 1
                    assert rec.intersection == ()
                    assert rec.covariate not in r.parents
        assert found > 0

    def test_alpha_monotonicity_of_accepted_family(self):
        ds = simulate(SPECS["dataset1"], 1000, 2)
        low = discover_v1(ds, "Y", alpha=0.01)
        high = discover_v1(ds, "Y", alpha=0.2)
        for cov in low.per_partition:
            fam_low = set(low.per_partition[cov].accepted_subsets)
            fam_high = set(high.per_partition[cov].accepted_subsets)
            assert fam_high <= fam_low
            if fam_high:
                # Fewer accepted sets can only grow the intersection.
                assert set(low.per_partition[cov].intersection) <= set(
                    high.per_partition[cov].intersection
                )

    def test_deterministic_and_worker_invariant(self):
        ds = simulate(SPECS["dataset3"], 1000, 4)
        a = json.dumps(discover_v1(ds, "Y", workers=1).to_dict(), sort_keys=True)
        b = json.dumps(discover_v1(ds, "Y", workers=8).to_dict(), sort_keys=True)
        c = json.dumps(discover_v1(ds, "Y").to_dict(), sort_keys=True)
        assert a == b == c

    def test_missing_target_rejected(self):
        ds = simulate(SPECS["dataset1"], 200, 0)
        with pytest.raises(KeyError):
            discover_v1(ds, "nope")


class TestDiscoverV2:
    def test_fallback_when_pool_covers_all_covariates(self):
        ds = simulate(SPECS["dataset1"], 1000, 0)
        r1 = discover_v1(ds, "Y")
        r2 = discover_v2(ds, "Y", cap=5)
        assert r2.method == "v2"
        assert r2.parents == r1.parents
        assert all(v == (1 if c in r1.parents else 0, 1) for c, v in r2.votes.items())
        assert any("single pool" in n for n in r2.notes)

    def test_pool_bookkeeping_on_dataset4(self):
        ds = simulate(SPECS["dataset4"], 1000, 0)
        r = discover_v2(ds, "Y", cap=5)
        n_cov = 9
        expected_subsets = sum(comb(n_cov, s) for s in range(6))
        for rec in r.per_partition.values():
            if rec.usable:
                assert len(rec.results) == expected_subsets
        for cov, (sel, elig) in r.votes.items():
            if r.per_partition[cov].usable:
                assert elig == comb(n_cov - 1, 4)
            assert 0 <= sel <= elig
        # Voting rule is exactly the recorded tallies against the threshold.
        expected_parents = tuple(
            c
            for c in ds.names
            if c != "Y"
            and r.votes[c][1] > 0
            and r.votes[c][0] >= (1 - r.alpha_vote) * r.votes[c][1] - 1e-9
        )
        assert r.parents == expected_parents

    def test_zero_alpha_vote_requires_unanimity(self):
        ds = simulate(SPECS["dataset4"], 1000, 1)
        r = discover_v2(ds, "Y", cap=5, alpha_vote=0.0)
        for cov in r.parents:
            sel, elig = r.votes[cov]
            assert sel == elig

    def test_deterministic_and_worker_invariant(self):
        ds = simulate(SPECS["dataset4"], 800, 2)
        a = json.dumps(discover_v2(ds, "Y", workers=1).to_dict(), sort_keys=True)
        b = json.dumps(discover_v2(ds, "Y", workers=8).to_dict(), sort_keys=True)
        assert a == b
