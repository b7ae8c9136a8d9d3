"""CSV writers. Floats use ``repr``, the shortest string that parses back to
the identical double, so every file round-trips bit-for-bit and identical runs
produce byte-identical files."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import CSV_FIELDS, DiagnosticsRecord


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return str(x)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
                w.writerow([format_value(x) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_csv(records: Iterable[DiagnosticsRecord], path) -> Path:
    """One row per diagnostics record under the fixed header."""
    return write_table(path, CSV_FIELDS, (tuple(float(x) for x in r.csv_values()) for r in records))


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    """Parse a numeric CSV written by :func:`emit_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], [[float(x) for x in row] for row in rows[1:]]


__all__ = ["emit_csv", "write_table", "read_csv", "format_value"]
