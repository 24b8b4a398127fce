# src/helpers.py
import os
import json
import csv

import numpy as np
import pandas as pd

from src.errors import InvalidArgumentError
from src.grid_fields import CellField, NodalField

FIELD_FORMATS = ("csv", "vtk")
FLOAT_FORMAT = "%.17g"
COORD_TOL = 1e-6


def _ensure_parent(path):
    dirpath = os.path.dirname(path)
    if dirpath:
        os.makedirs(dirpath, exist_ok=True)


def save_json(obj, path):
    """Save Python object to JSON file (ensure folder exists)."""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, default=str, ensure_ascii=False, sort_keys=True)


def write_manifest(out_dir, resolved_config, files):
    """Record the resolved config next to the files it produced."""
    path = os.path.join(out_dir, "manifest.json")
    save_json({"config": resolved_config, "files": sorted(files)}, path)
    return path


def _normalize_cell(val):
    """Normalize value for CSV cell (serialize complex types)."""
    if val is None:
        return ""
    if isinstance(val, (dict, list)):
        return json.dumps(val, ensure_ascii=False)
    if isinstance(val, float):
        return FLOAT_FORMAT % val
    return val


def append_csv(data, filename):
    """
    Append a dict or list of dicts to a CSV file. The header is taken from the
    first rows written; later rows must use the same keys.
    """
    if data is None:
        return
    rows = [data] if isinstance(data, dict) else list(data)
    if not rows:
        return

    _ensure_parent(filename)
    fieldnames = list(rows[0].keys())
    exists = os.path.exists(filename) and os.path.getsize(filename) > 0
    if exists:
        with open(filename, "r", encoding="utf-8", newline="") as rf:
            fieldnames = next(csv.reader(rf))

    with open(filename, "a", encoding="utf-8", newline="") as af:
        writer = csv.DictWriter(af, fieldnames=fieldnames)
        if not exists:
            writer.writeheader()
        for r in rows:
            if set(r) != set(fieldnames):
                raise InvalidArgumentError(f"row keys {sorted(r)} do not match header {fieldnames}")
            writer.writerow({k: _normalize_cell(v) for k, v in r.items()})


def _field_table(grid, field):
    if isinstance(field, NodalField):
        x, y = grid.interior_xy()
    elif isinstance(field, CellField):
        x, y = grid.cell_xy()
    else:
        raise InvalidArgumentError(f"cannot export {type(field).__name__}")
    return pd.DataFrame({"x": x.ravel(), "y": y.ravel(), "value": field.values})


def _write_vtk(grid, field, path, name):
    n = grid.n
    lines = [
        "# vtk DataFile Version 3.0",
        f"{name} on (-{grid.M:g},{grid.M:g})^2, n={n}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n + 1} {n + 1} 1",
        f"ORIGIN {-grid.M!r} {-grid.M!r} 0",
        f"SPACING {grid.h!r} {grid.h!r} 1",
    ]
    if isinstance(field, NodalField):
        values = field.full().ravel()
        lines.append(f"POINT_DATA {values.size}")
    else:
        values = field.values
        lines.append(f"CELL_DATA {values.size}")
    lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [FLOAT_FORMAT % v for v in values]
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def export_field(grid, field, path, fmt="csv", name="value"):
    """
    Write a nodal or cell field.
    csv: header x,y,value, interior nodes or cell centers in row-major order.
    vtk: legacy ASCII STRUCTURED_POINTS; nodal fields as POINT_DATA over all
    (n+1)^2 nodes (boundary zeros included), cell fields as CELL_DATA.
    """
    if fmt not in FIELD_FORMATS:
        raise InvalidArgumentError(f"format must be one of {FIELD_FORMATS}, got '{fmt}'")
    if field.grid != grid:
        raise InvalidArgumentError(f"field lives on {field.grid}, expected {grid}")
    _ensure_parent(path)
    if fmt == "csv":
        _field_table(grid, field).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    else:
        _write_vtk(grid, field, path, name)
    return path


def read_field_csv(grid, path, kind="cell"):
    """
    Read a CSV written by export_field back into a NodalField ('node') or
    CellField ('cell'). The x,y columns must match the grid's coordinates.
    """
    if kind == "node":
        x, y = grid.interior_xy()
        make = NodalField
    elif kind == "cell":
        x, y = grid.cell_xy()
        make = CellField
    else:
        raise InvalidArgumentError(f"kind must be 'node' or 'cell', got '{kind}'")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InvalidArgumentError(f"{path}: unreadable CSV ({e})") from e
    if list(df.columns) != ["x", "y", "value"]:
        raise InvalidArgumentError(f"{path}: expected columns x,y,value, got {list(df.columns)}")
    if len(df) != x.size:
        raise InvalidArgumentError(f"{path}: {len(df)} rows, grid {grid} expects {x.size}")
    try:
        coords = df[["x", "y"]].to_numpy(dtype=float)
    except ValueError as e:
        raise InvalidArgumentError(f"{path}: non-numeric coordinates") from e
    if not np.allclose(coords, np.column_stack([x.ravel(), y.ravel()]), rtol=0.0, atol=COORD_TOL * grid.h):
        raise InvalidArgumentError(f"{path}: x,y do not match the {kind} coordinates of {grid}")
    try:
        values = df["value"].to_numpy(dtype=float)
    except ValueError as e:
        raise InvalidArgumentError(f"{path}: non-numeric values") from e
    return make(grid, values)
