# tests/test_helpers.py
import json

import numpy as np
import pytest

from src.errors import InvalidArgumentError
from src.grid_fields import CellField, NodalField, make_grid
from src.helpers import append_csv, export_field, read_field_csv, save_json, write_manifest


def test_single_node_csv(tmp_path):
    g = make_grid(1, 2)
    path = export_field(g, NodalField.constant(g, 0.25), str(tmp_path / "u.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines == ["x,y,value", "0,0,0.25"]


def test_csv_round_trip_is_bit_exact(tmp_path):
    g = make_grid(1.3, 8)
    rng = np.random.default_rng(0)
    cell = CellField(g, rng.standard_normal(g.num_cells) * 1e3)
    node = NodalField(g, rng.standard_normal(g.num_interior) / 7.0)
    export_field(g, cell, str(tmp_path / "mu.csv"))
    export_field(g, node, str(tmp_path / "u.csv"))
    np.testing.assert_array_equal(read_field_csv(g, str(tmp_path / "mu.csv"), kind="cell").values, cell.values)
    np.testing.assert_array_equal(read_field_csv(g, str(tmp_path / "u.csv"), kind="node").values, node.values)


def test_csv_rows_are_row_major(tmp_path):
    g = make_grid(1, 4)
    path = export_field(g, CellField(g, np.arange(16.0)), str(tmp_path / "c.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[1] == "-0.75,-0.75,0"
    assert lines[2] == "-0.25,-0.75,1"


def test_vtk_cell_field(tmp_path):
    g = make_grid(5, 10)
    path = export_field(g, CellField.constant(g, 1.5), str(tmp_path / "mu.vtk"), fmt="vtk", name="mu")
    lines = open(path, encoding="ascii").read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert "DATASET STRUCTURED_POINTS" in lines
    assert "DIMENSIONS 11 11 1" in lines
    assert "ORIGIN -5.0 -5.0 0" in lines
    assert "SPACING 1.0 1.0 1" in lines
    assert "CELL_DATA 100" in lines
    assert "SCALARS mu double 1" in lines
    assert lines[-100:] == ["1.5"] * 100


def test_vtk_nodal_field_includes_boundary(tmp_path):
    g = make_grid(1, 2)
    path = export_field(g, NodalField.constant(g, 0.25), str(tmp_path / "u.vtk"), fmt="vtk", name="u")
    lines = open(path, encoding="ascii").read().splitlines()
    assert "POINT_DATA 9" in lines
    assert lines[-9:] == ["0", "0", "0", "0", "0.25", "0", "0", "0", "0"]


def test_export_rejects_bad_arguments(tmp_path):
    g = make_grid(1, 2)
    with pytest.raises(InvalidArgumentError):
        export_field(g, CellField.zeros(g), str(tmp_path / "x.png"), fmt="png")
    with pytest.raises(InvalidArgumentError):
        export_field(make_grid(1, 4), CellField.zeros(g), str(tmp_path / "x.csv"))


def test_read_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        read_field_csv(make_grid(1, 2), str(path))


def test_read_rejects_unparseable_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("x,y,value\n0,0,1\n0,0,1,5,6\n", encoding="utf-8")
    for path in (empty, ragged):
        with pytest.raises(InvalidArgumentError):
            read_field_csv(make_grid(1, 2), str(path), kind="node")


def test_read_rejects_field_from_another_grid(tmp_path):
    small = make_grid(1, 4)
    path = export_field(small, CellField.constant(small, 2.0), str(tmp_path / "mu.csv"))
    with pytest.raises(InvalidArgumentError, match="coordinates"):
        read_field_csv(make_grid(2, 4), path, kind="cell")
    with pytest.raises(InvalidArgumentError, match="rows"):
        read_field_csv(make_grid(1, 6), path, kind="cell")
    assert read_field_csv(small, path, kind="cell").values.tolist() == [2.0] * 16


def test_append_csv(tmp_path):
    path = str(tmp_path / "log" / "cost_log.csv")
    append_csv({"iter": 1, "cost": 0.5}, path)
    append_csv([{"iter": 2, "cost": 0.25}, {"iter": 3, "cost": 0.125}], path)
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines == ["iter,cost", "1,0.5", "2,0.25", "3,0.125"]
    with pytest.raises(InvalidArgumentError):
        append_csv({"iter": 4}, path)


def test_manifest(tmp_path):
    path = write_manifest(str(tmp_path), {"M": 5.0, "n": 10}, ["u.csv", "mu.csv"])
    doc = json.load(open(path, encoding="utf-8"))
    assert doc["config"] == {"M": 5.0, "n": 10}
    assert doc["files"] == ["mu.csv", "u.csv"]

    save_json({"b": 1, "a": [1, 2]}, str(tmp_path / "nested" / "s.json"))
    assert json.load(open(tmp_path / "nested" / "s.json", encoding="utf-8")) == {"a": [1, 2], "b": 1}
