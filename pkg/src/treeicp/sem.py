"""Structural equation models: declarative specs, reproducible sampling, ground truth.

A model is an ordered list of equations, each assigning a variable a linear
combination of previously defined variables plus an independent noise draw.
The built-in benchmark specs cover a range of graph shapes: chains, forks,
confounders, and mixed continuous / binary / categorical columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from zlib import crc32

import numpy as np

__all__ = [
    "SpecValidationError",
    "GaussianNoise",
    "BinomialNoise",
    "Equation",
    "SemSpec",
    "Dataset",
    "CausalGraph",
    "simulate",
    "ground_truth",
    "builtin_specs",
    "VARIABLE_KINDS",
]

VARIABLE_KINDS = ("continuous", "binary", "categorical")


class SpecValidationError(ValueError):
    """Raised for structurally invalid model specs or datasets."""


@dataclass(frozen=True)
class GaussianNoise:
    mean: float
    std: float

    kind = "gaussian"

    def __post_init__(self):
        if self.std < 0:
            raise SpecValidationError(f"gaussian std must be >= 0, got {self.std}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, n)


@dataclass(frozen=True)
class BinomialNoise:
    trials: int
    prob: float

    kind = "binomial"

    def __post_init__(self):
        if self.trials < 1:
            raise SpecValidationError(f"binomial trials must be >= 1, got {self.trials}")
        if not 0.0 <= self.prob <= 1.0:
            raise SpecValidationError(f"binomial prob must be in [0,1], got {self.prob}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.binomial(self.trials, self.prob, n).astype(float)


NoiseSpec = GaussianNoise | BinomialNoise


@dataclass(frozen=True)
class Equation:
    """One structural assignment: variable = sum(coeff * parent) + noise."""

    variable: str
    parents: tuple[tuple[str, float], ...]
    noise: NoiseSpec


@dataclass(frozen=True)
class SemSpec:
    """An ordered, acyclic-by-construction structural equation model."""

    name: str
    equations: tuple[Equation, ...]
    kinds: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen: set[str] = set()
        for eq in self.equations:
            if eq.variable in seen:
                raise SpecValidationError(f"variable {eq.variable!r} defined twice")
            for parent, _coeff in eq.parents:
                if parent not in seen:
                    raise SpecValidationError(
                        f"equation for {eq.variable!r} references {parent!r} before "
                        "its definition (unknown parent or cycle)"
                    )
            seen.add(eq.variable)
        missing = seen - set(self.kinds)
        if missing:
            raise SpecValidationError(f"kinds missing for variables: {sorted(missing)}")
        for var, kind in self.kinds.items():
            if kind not in VARIABLE_KINDS:
                raise SpecValidationError(f"unknown kind {kind!r} for variable {var!r}")

    @property
    def variables(self) -> list[str]:
        return [eq.variable for eq in self.equations]


@dataclass
class Dataset:
    """An n x p sample matrix with per-column names and kinds."""

    columns: tuple[tuple[str, str], ...]
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n, p = self.values.shape
        if n < 1:
            raise SpecValidationError("dataset needs at least one row")
        if p < 2 or p != len(self.columns):
            raise SpecValidationError(
                f"dataset needs >= 2 columns matching the header, got {p} values "
                f"for {len(self.columns)} declared columns"
            )
        for j, (name, kind) in enumerate(self.columns):
            if kind not in VARIABLE_KINDS:
                raise SpecValidationError(f"unknown kind {kind!r} for column {name!r}")
            col = self.values[:, j]
            if kind == "binary" and not np.isin(col, (0.0, 1.0)).all():
                raise SpecValidationError(f"binary column {name!r} has values outside {{0,1}}")
            if kind == "categorical" and not (col == np.round(col)).all():
                raise SpecValidationError(f"categorical column {name!r} has non-integer levels")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    @property
    def kinds(self) -> dict[str, str]:
        return dict(self.columns)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None
        return self.values[:, j]


@dataclass(frozen=True)
class CausalGraph:
    """Directed acyclic graph of parent -> child relations."""

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        node_set = set(self.nodes)
        for parent, child in self.edges:
            if parent not in node_set or child not in node_set:
                raise SpecValidationError(f"edge ({parent}, {child}) references unknown node")
        # Cycle check by iterative removal of sink-free nodes.
        remaining = dict.fromkeys(self.nodes)
        out = {n: set() for n in self.nodes}
        for parent, child in self.edges:
            out[parent].add(child)
        changed = True
        while changed and remaining:
            changed = False
            for n in list(remaining):
                if not (out[n] & remaining.keys()):
                    del remaining[n]
                    changed = True
        if remaining:
            raise SpecValidationError(f"graph contains a cycle among {sorted(remaining)}")

    def parents(self, node: str) -> set[str]:
        return {p for p, c in self.edges if c == node}

    def undirected(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(e) for e in self.edges)


def _variable_rng(seed: int, name: str) -> np.random.Generator:
    # One independent stream per variable, keyed by name, so that adding or
    # reordering variables never perturbs the draws of existing ones.
    return np.random.default_rng([seed, crc32(name.encode())])


def simulate(spec: SemSpec, n: int, seed: int) -> Dataset:
    """Sample ``n`` rows from ``spec``, deterministically for a fixed seed.

    Each variable gets its own PCG64 stream seeded by ``(seed, crc32(name))``
    and is computed in the spec's topological order as the weighted sum of its
    parents plus that stream's noise draw.
    """
    if n < 1:
        raise SpecValidationError(f"sample count must be >= 1, got {n}")
    if seed < 0:
        raise SpecValidationError(f"seed must be a nonnegative integer, got {seed}")
    values: dict[str, np.ndarray] = {}
    for eq in spec.equations:
        noise = eq.noise.draw(_variable_rng(seed, eq.variable), n)
        col = noise
        for parent, coeff in eq.parents:
            col = col + coeff * values[parent]
        values[eq.variable] = col
    matrix = np.column_stack([values[v] for v in spec.variables])
    columns = tuple((v, spec.kinds[v]) for v in spec.variables)
    return Dataset(columns=columns, values=matrix, seed=seed)


def ground_truth(spec: SemSpec) -> CausalGraph:
    """The graph with one edge per (parent, child) coefficient in the spec."""
    edges = frozenset(
        (parent, eq.variable) for eq in spec.equations for parent, _coeff in eq.parents
    )
    return CausalGraph(nodes=tuple(spec.variables), edges=edges)


# ----------------------------------------------------------------------
# Built-in benchmark specifications


def _gauss(mean, std):
    return GaussianNoise(mean=mean, std=std)


def _eq(variable, parents, noise):
    return Equation(variable=variable, parents=tuple(parents), noise=noise)


def builtin_specs() -> list[SemSpec]:
    """The five built-in benchmark models.

    ``dataset2`` mixes column kinds: a 7-level count variable (categorical)
    and a Bernoulli variable (binary).  The Bernoulli reading of its second
    noise source is a deliberate interpretation choice; swap it by editing a
    serialized copy of the spec if a different reading is wanted.
    """
    dataset1 = SemSpec(
        name="dataset1",
        equations=(
            _eq("X1", [], _gauss(0.8, 1.0)),
            _eq("X2", [], _gauss(0.5, 1.0)),
            _eq("Y", [("X1", 0.7), ("X2", 0.4)], _gauss(0.0, 1.0)),
            _eq("X3", [("Y", 0.5)], _gauss(0.0, 1.0)),
        ),
        kinds={v: "continuous" for v in ("X1", "X2", "Y", "X3")},
    )
    dataset2 = SemSpec(
        name="dataset2",
        equations=(
            _eq("X1", [], BinomialNoise(trials=6, prob=0.5)),
            _eq("X2", [], BinomialNoise(trials=1, prob=0.5)),
            _eq("Y", [("X1", 0.7), ("X2", 0.4)], _gauss(0.0, 1.0)),
            _eq("X3", [("Y", 0.5)], _gauss(0.0, 1.0)),
        ),
        kinds={"X1": "categorical", "X2": "binary", "Y": "continuous", "X3": "continuous"},
    )
    dataset3 = SemSpec(
        name="dataset3",
        equations=(
            _eq("X1", [], _gauss(0.2, 0.5)),
            _eq("W", [], _gauss(0.5, 1.0)),
            _eq("X2", [("W", 0.6), ("X1", 0.4)], _gauss(0.0, 1.0)),
            _eq("Y", [("X2", 0.5), ("W", 0.5)], _gauss(0.0, 1.0)),
            _eq("Y2", [("X2", 0.7)], _gauss(0.2, 1.0)),
            _eq("X3", [("Y", 0.3)], _gauss(0.0, 1.0)),
        ),
        kinds={v: "continuous" for v in ("X1", "W", "X2", "Y", "Y2", "X3")},
    )
    dataset4 = SemSpec(
        name="dataset4",
        equations=(
            _eq("X", [], _gauss(0.2, 0.8)),
            _eq("X1", [], _gauss(0.0, 1.1)),
            _eq("X0", [("X", 0.5)], _gauss(0.0, 0.5)),
            _eq("W", [("X", 1.0)], _gauss(0.0, 1.0)),
            _eq("X2", [("X1", 0.5), ("W", 0.5), ("X0", 0.5)], _gauss(0.0, 0.0)),
            _eq("Y", [("X2", 0.5), ("W", 0.5)], _gauss(0.0, 1.0)),
            _eq("Y2", [("X2", 0.7)], _gauss(0.2, 1.0)),
            _eq("X3", [("Y", 0.5)], _gauss(0.0, 1.0)),
            _eq("X4", [("W", 1.0)], _gauss(0.0, 1.0)),
            _eq("X5", [("X4", 0.8)], _gauss(0.0, 1.0)),
        ),
        kinds={v: "continuous" for v in ("X", "X1", "X0", "W", "X2", "Y", "Y2", "X3", "X4", "X5")},
    )
    dataset5 = SemSpec(
        name="dataset5",
        equations=(
            _eq("X", [], _gauss(0.2, 0.8)),
            _eq("X1", [], _gauss(0.0, 1.1)),
            _eq("X9", [], _gauss(0.4, 0.75)),
            _eq("X0", [("X", 0.5)], _gauss(0.0, 0.5)),
            _eq("W", [("X", 1.0)], _gauss(0.0, 1.0)),
            _eq("X2", [("X1", 0.5), ("W", 0.5), ("X0", 0.5)], _gauss(0.0, 0.0)),
            _eq("Y", [("X2", 0.5), ("W", 0.5), ("X9", 0.5)], _gauss(0.0, 1.0)),
            _eq("Y2", [("X2", 0.7)], _gauss(0.2, 1.0)),
            _eq("X3", [("Y", 0.5)], _gauss(0.0, 1.0)),
            _eq("X4", [("W", 1.0)], _gauss(0.0, 1.0)),
            _eq("X5", [("X4", 0.8)], _gauss(0.0, 1.0)),
            _eq("X6", [("X3", 1.0)], _gauss(0.0, 1.0)),
            _eq("X7", [("X6", 0.1)], _gauss(0.2, 0.5)),
        ),
        kinds={
            v: "continuous"
            for v in ("X", "X1", "X9", "X0", "W", "X2", "Y", "Y2", "X3", "X4", "X5", "X6", "X7")
        },
    )
    return [dataset1, dataset2, dataset3, dataset4, dataset5]
