from zlib import crc32

import numpy as np
import pytest

from treeicp.sem import (
    BinomialNoise,
    CausalGraph,
    Dataset,
    Equation,
    GaussianNoise,
    SemSpec,
    SpecValidationError,
    builtin_specs,
    ground_truth,
    simulate,
)


def spec_by_name(name):
    return {s.name: s for s in builtin_specs()}[name]


class TestBuiltinSpecs:
    def test_names_and_sizes(self):
        specs = builtin_specs()
        assert [s.name for s in specs] == [f"dataset{i}" for i in range(1, 6)]
        assert len(specs[0].variables) == 4
        assert len(spec_by_name("dataset5").variables) == 13
        assert {"X6", "X7"} <= set(spec_by_name("dataset5").variables)

    def test_dataset2_noise_sources(self):
        d2 = spec_by_name("dataset2")
        noises = {eq.variable: eq.noise for eq in d2.equations}
        assert noises["X1"] == BinomialNoise(trials=6, prob=0.5)
        assert noises["X2"] == BinomialNoise(trials=1, prob=0.5)
        assert d2.kinds["X1"] == "categorical"
        assert d2.kinds["X2"] == "binary"

    def test_continuous_everywhere_else(self):
        for name in ("dataset1", "dataset3", "dataset4", "dataset5"):
            assert set(spec_by_name(name).kinds.values()) == {"continuous"}


class TestSimulate:
    def test_deterministic(self):
        spec = spec_by_name("dataset3")
        a = simulate(spec, 200, seed=5)
        b = simulate(spec, 200, seed=5)
        assert np.array_equal(a.values, b.values)
        assert a.columns == b.columns

    def test_generative_identity_dataset1(self):
        ds = simulate(spec_by_name("dataset1"), 5, seed=0)
        eps = np.random.default_rng([0, crc32(b"Y")]).normal(0.0, 1.0, 5)
        x1, x2 = ds.column("X1"), ds.column("X2")
        # Same accumulation order as the simulator: noise, then parents in order.
        assert np.array_equal(ds.column("Y"), (eps + 0.7 * x1) + 0.4 * x2)

    def test_zero_noise_copies_parent(self):
        spec = SemSpec(
            name="copy",
            equations=(
                Equation("X", (), GaussianNoise(0.0, 1.0)),
                Equation("C", (("X", 1.0),), GaussianNoise(0.0, 0.0)),
            ),
            kinds={"X": "continuous", "C": "continuous"},
        )
        ds = simulate(spec, 50, seed=3)
        assert np.array_equal(ds.column("C"), ds.column("X"))

    def test_law_of_large_numbers_mean(self):
        ds = simulate(spec_by_name("dataset1"), 100_000, seed=1)
        assert abs(ds.column("X1").mean() - 0.8) < 0.02

    def test_coefficients_recovered_by_regression(self):
        ds = simulate(spec_by_name("dataset1"), 10_000, seed=2)
        design = np.column_stack([np.ones(ds.n), ds.column("X1"), ds.column("X2")])
        y = ds.column("Y")
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        sigma2 = resid @ resid / (ds.n - 3)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        se = np.sqrt(np.diag(cov))
        for est, truth, err in zip(beta[1:], (0.7, 0.4), se[1:]):
            assert abs(est - truth) <= 3.0 * err

    def test_adding_a_variable_keeps_existing_columns(self):
        base = spec_by_name("dataset1")
        extended = SemSpec(
            name="dataset1ext",
            equations=base.equations + (Equation("Z", (("Y", 2.0),), GaussianNoise(0.0, 1.0)),),
            kinds={**base.kinds, "Z": "continuous"},
        )
        a = simulate(base, 100, seed=9)
        b = simulate(extended, 100, seed=9)
        for name in base.variables:
            assert np.array_equal(a.column(name), b.column(name))

    def test_binary_and_categorical_domains(self):
        ds = simulate(spec_by_name("dataset2"), 500, seed=4)
        assert set(np.unique(ds.column("X2"))) <= {0.0, 1.0}
        levels = np.unique(ds.column("X1"))
        assert np.array_equal(levels, np.round(levels))
        assert levels.min() >= 0 and levels.max() <= 6

    def test_invalid_inputs(self):
        spec = spec_by_name("dataset1")
        with pytest.raises(SpecValidationError):
            simulate(spec, 0, seed=1)
        with pytest.raises(SpecValidationError):
            simulate(spec, 10, seed=-1)


class TestGroundTruth:
    def test_dataset1_edges(self):
        g = ground_truth(spec_by_name("dataset1"))
        assert g.parents("Y") == {"X1", "X2"}
        assert g.parents("X3") == {"Y"}
        assert g.parents("X1") == set()

    def test_dataset3_edges(self):
        g = ground_truth(spec_by_name("dataset3"))
        assert g.parents("Y") == {"X2", "W"}

    def test_pure_noise_spec_has_no_edges(self):
        spec = SemSpec(
            name="noise",
            equations=(
                Equation("A", (), GaussianNoise(0.0, 1.0)),
                Equation("B", (), GaussianNoise(0.0, 1.0)),
            ),
            kinds={"A": "continuous", "B": "continuous"},
        )
        assert ground_truth(spec).edges == frozenset()

    def test_idempotent(self):
        spec = spec_by_name("dataset4")
        assert ground_truth(spec) == ground_truth(spec)


class TestValidation:
    def test_unknown_parent_rejected(self):
        with pytest.raises(SpecValidationError, match="before its definition"):
            SemSpec(
                name="bad",
                equations=(Equation("A", (("B", 1.0),), GaussianNoise(0.0, 1.0)),),
                kinds={"A": "continuous"},
            )

    def test_missing_kind_rejected(self):
        with pytest.raises(SpecValidationError, match="kinds missing"):
            SemSpec(
                name="bad",
                equations=(Equation("A", (), GaussianNoise(0.0, 1.0)),),
                kinds={},
            )

    def test_noise_parameter_domains(self):
        with pytest.raises(SpecValidationError):
            GaussianNoise(0.0, -1.0)
        with pytest.raises(SpecValidationError):
            BinomialNoise(trials=0, prob=0.5)
        with pytest.raises(SpecValidationError):
            BinomialNoise(trials=2, prob=1.5)

    def test_binary_column_domain_enforced(self):
        with pytest.raises(SpecValidationError, match="binary"):
            Dataset(
                columns=(("a", "continuous"), ("b", "binary")),
                values=np.array([[0.0, 2.0], [1.0, 1.0]]),
            )

    def test_graph_cycle_rejected(self):
        with pytest.raises(SpecValidationError, match="cycle"):
            CausalGraph(nodes=("a", "b"), edges=frozenset({("a", "b"), ("b", "a")}))
