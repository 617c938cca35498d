import json

import numpy as np
import pytest

from treeicp.io import (
    DatasetFormatError,
    GraphDocument,
    export_dot,
    read_dataset,
    read_spec,
    write_dataset,
    write_json,
    write_spec,
)
from treeicp.sem import (
    Dataset,
    SpecValidationError,
    builtin_specs,
    ground_truth,
    simulate,
)

SPECS = {s.name: s for s in builtin_specs()}


class TestDatasetRoundTrip:
    def test_lossless_round_trip(self, tmp_path):
        ds = simulate(SPECS["dataset2"], 200, seed=5)
        path = tmp_path / "d2.csv"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert back.columns == ds.columns
        assert np.array_equal(back.values, ds.values)
        assert back.seed == 5

    def test_sidecar_metadata(self, tmp_path):
        ds = simulate(SPECS["dataset1"], 50, seed=9)
        path = tmp_path / "d1.csv"
        write_dataset(ds, path)
        meta = json.loads((tmp_path / "d1.csv.meta.json").read_text())
        assert meta["seed"] == 9
        assert meta["rows"] == 50

    def test_binary_domain_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1:continuous,y:binary\n0.5,2\n")
        with pytest.raises(SpecValidationError, match="binary"):
            read_dataset(path)

    def test_missing_kind_defaults_to_continuous_with_warning(self, tmp_path):
        path = tmp_path / "nokind.csv"
        path.write_text("x1,y:continuous\n0.5,1.0\n0.1,2.0\n")
        with pytest.warns(UserWarning, match="assuming continuous"):
            ds = read_dataset(path)
        assert ds.columns[0] == ("x1", "continuous")

    def test_positioned_parse_errors(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a:continuous,b:continuous\n1.0,2.0\n3.0,oops\n")
        with pytest.raises(DatasetFormatError, match=r"row 3, column 2"):
            read_dataset(path)
        path.write_text("a:continuous,b:continuous\n1.0\n")
        with pytest.raises(DatasetFormatError, match=r"row 2"):
            read_dataset(path)
        path.write_text("a:continuous,b:wat\n1.0,2.0\n")
        with pytest.raises(DatasetFormatError, match="unknown kind"):
            read_dataset(path)


class TestSpecRoundTrip:
    @pytest.mark.parametrize("name", sorted(SPECS))
    def test_round_trip(self, tmp_path, name):
        path = tmp_path / f"{name}.json"
        write_spec(SPECS[name], path)
        back = read_spec(path)
        assert back == SPECS[name]


class TestDot:
    def test_empty_graph(self, tmp_path):
        doc = GraphDocument(nodes=("A", "B"), edges=())
        path = tmp_path / "g.dot"
        export_dot(doc, path)
        text = path.read_text()
        assert text.startswith("digraph")
        assert '"A";' in text and '"B";' in text
        assert "->" not in text

    def test_dataset1_ground_truth_has_three_edges(self, tmp_path):
        doc = GraphDocument.from_causal_graph(ground_truth(SPECS["dataset1"]))
        path = tmp_path / "g.dot"
        export_dot(doc, path)
        lines = [l for l in path.read_text().splitlines() if "->" in l]
        assert len(lines) == 3
        assert all("[dir=none]" not in l for l in lines)

    def test_undirected_edges_marked(self, tmp_path):
        doc = GraphDocument.from_parent_sets(("A", "B", "Y"), {"Y": ("A", "B")})
        path = tmp_path / "g.dot"
        export_dot(doc, path)
        lines = [l for l in path.read_text().splitlines() if "->" in l]
        assert len(lines) == 2
        assert all("[dir=none]" in l for l in lines)

    def test_deterministic_sorted_output(self, tmp_path):
        doc1 = GraphDocument(nodes=("B", "A"), edges=(("B", "A", True),))
        doc2 = GraphDocument(nodes=("A", "B"), edges=(("B", "A", True),))
        p1, p2 = tmp_path / "1.dot", tmp_path / "2.dot"
        export_dot(doc1, p1)
        export_dot(doc2, p2)
        assert p1.read_text() == p2.read_text()

    def test_unknown_edge_endpoint_rejected(self):
        with pytest.raises(ValueError, match="unknown node"):
            GraphDocument(nodes=("A",), edges=(("A", "Z", True),))


def test_write_json_is_sorted_and_newline_terminated(tmp_path):
    path = tmp_path / "out.json"
    write_json({"b": 1, "a": 2}, path)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_dataset_values_written_with_full_precision(tmp_path):
    values = np.array([[0.1 + 0.2, 1e-17], [np.pi, -2.5000000000000004]])
    ds = Dataset(columns=(("a", "continuous"), ("b", "continuous")), values=values)
    path = tmp_path / "prec.csv"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert np.array_equal(back.values, values)
