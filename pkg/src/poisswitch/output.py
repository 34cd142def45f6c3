"""CSV and JSON emission.

Floats are written with ``repr`` so a read/write cycle reproduces the file
byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .odesolver import ValueSolution
from .regions import RegionReport

VALUE_COLUMNS = ("x", "v1", "v2", "G1", "G2", "in_S1", "in_S2")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_table(path) -> tuple[list[str], list[list]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        rows = [[_parse(c) for c in row] for row in r]
    return columns, rows


def value_rows(solution: ValueSolution, report: RegionReport):
    x = solution.grid.nodes
    for k in range(len(x)):
        yield (float(x[k]), float(solution.v1[k]), float(solution.v2[k]),
               float(report.G1[k]), float(report.G2[k]),
               int(report.G1[k] <= 0), int(report.G2[k] <= 0))


def write_values(path, solution: ValueSolution, report: RegionReport) -> Path:
    return write_table(path, VALUE_COLUMNS, value_rows(solution, report))


def jsonable(obj):
    """Replace non-finite floats by strings and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def write_json(path, data: dict) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path
