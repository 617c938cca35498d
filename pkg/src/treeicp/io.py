"""Persistence: dataset CSV files, model spec JSON, result JSON, DOT graph export.

Datasets are CSV with a one-line header of ``name:kind`` fields and a sidecar
``<path>.meta.json`` recording the generating seed.  All writers emit sorted,
deterministic output so repeated runs diff cleanly.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sem import (
    BinomialNoise,
    CausalGraph,
    Dataset,
    Equation,
    GaussianNoise,
    SemSpec,
    VARIABLE_KINDS,
)

__all__ = [
    "DatasetFormatError",
    "GraphDocument",
    "read_dataset",
    "write_dataset",
    "read_spec",
    "write_spec",
    "export_dot",
    "write_json",
]


class DatasetFormatError(ValueError):
    """Malformed dataset file; the message carries the row/column position."""


# ----------------------------------------------------------------------
# Dataset CSV


def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset as CSV (`name:kind` header) plus a seed sidecar file.

    Values are written with ``repr`` so finite floats round-trip exactly.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{name}:{kind}" for name, kind in dataset.columns])
        for row in dataset.values:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "seed": dataset.seed,
        "rows": int(dataset.values.shape[0]),
        "columns": [list(c) for c in dataset.columns],
    }
    Path(f"{path}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _parse_header(fields) -> tuple[tuple[str, str], ...]:
    columns = []
    for j, field_ in enumerate(fields):
        name, sep, kind = field_.partition(":")
        if not name:
            raise DatasetFormatError(f"header column {j + 1}: empty column name")
        if not sep:
            warnings.warn(
                f"header column {j + 1} ({name!r}) has no kind suffix; assuming continuous",
                stacklevel=3,
            )
            kind = "continuous"
        if kind not in VARIABLE_KINDS:
            raise DatasetFormatError(
                f"header column {j + 1} ({name!r}): unknown kind {kind!r}"
            )
        columns.append((name, kind))
    return tuple(columns)


def read_dataset(path) -> Dataset:
    """Read a CSV dataset written by ``write_dataset`` (or compatible)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file: no header row") from None
        columns = _parse_header(header)
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise DatasetFormatError(
                    f"row {i}: expected {len(columns)} cells, found {len(row)}"
                )
            values = []
            for j, cell in enumerate(row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DatasetFormatError(
                        f"row {i}, column {j + 1}: non-numeric cell {cell!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise DatasetFormatError("no data rows")

    seed = None
    meta_path = Path(f"{path}.meta.json")
    if meta_path.exists():
        seed = json.loads(meta_path.read_text()).get("seed")
    return Dataset(columns=columns, values=np.array(rows), seed=seed)


# ----------------------------------------------------------------------
# Model spec JSON


def _noise_to_dict(noise) -> dict:
    if isinstance(noise, GaussianNoise):
        return {"kind": "gaussian", "mean": noise.mean, "std": noise.std}
    return {"kind": "binomial", "trials": noise.trials, "prob": noise.prob}


def _noise_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "gaussian":
        return GaussianNoise(mean=d["mean"], std=d["std"])
    if kind == "binomial":
        return BinomialNoise(trials=d["trials"], prob=d["prob"])
    raise DatasetFormatError(f"unknown noise kind {kind!r}")


def write_spec(spec: SemSpec, path) -> None:
    doc = {
        "name": spec.name,
        "equations": [
            {
                "variable": eq.variable,
                "parents": [[p, c] for p, c in eq.parents],
                "noise": _noise_to_dict(eq.noise),
            }
            for eq in spec.equations
        ],
        "kinds": dict(sorted(spec.kinds.items())),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_spec(path) -> SemSpec:
    doc = json.loads(Path(path).read_text())
    equations = tuple(
        Equation(
            variable=eq["variable"],
            parents=tuple((p, float(c)) for p, c in eq.get("parents", [])),
            noise=_noise_from_dict(eq["noise"]),
        )
        for eq in doc["equations"]
    )
    return SemSpec(name=doc["name"], equations=equations, kinds=dict(doc["kinds"]))


# ----------------------------------------------------------------------
# Graph documents and DOT export


@dataclass(frozen=True)
class GraphDocument:
    """A graph ready for rendering; edges may be directed or undirected."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, bool], ...]  # (tail, head, directed)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.nodes)
        for tail, head, _ in self.edges:
            if tail not in known or head not in known:
                raise ValueError(f"edge ({tail}, {head}) references unknown node")

    @staticmethod
    def from_causal_graph(graph: CausalGraph, metadata: dict | None = None) -> "GraphDocument":
        return GraphDocument(
            nodes=tuple(graph.nodes),
            edges=tuple((a, b, True) for a, b in sorted(graph.edges)),
            metadata=metadata or {},
        )

    @staticmethod
    def from_parent_sets(
        nodes, parent_sets: dict[str, tuple[str, ...]], metadata: dict | None = None
    ) -> "GraphDocument":
        """Discovered parent relations; undirected because the method cannot orient."""
        pairs = sorted(
            {tuple(sorted((p, t))) for t, parents in parent_sets.items() for p in parents}
        )
        return GraphDocument(
            nodes=tuple(nodes),
            edges=tuple((a, b, False) for a, b in pairs),
            metadata=metadata or {},
        )


def export_dot(graph: GraphDocument, path) -> None:
    """Write the graph in DOT notation, nodes and edges sorted for stable diffs."""
    lines = ["digraph causal {"]
    for key in sorted(graph.metadata):
        lines.append(f'  // {key}: {graph.metadata[key]}')
    for node in sorted(graph.nodes):
        lines.append(f'  "{node}";')
    for tail, head, directed in sorted(graph.edges):
        attr = "" if directed else " [dir=none]"
        lines.append(f'  "{tail}" -> "{head}"{attr};')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(document: dict, path) -> None:
    """Deterministic JSON writer used for discovery results and reports."""
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
