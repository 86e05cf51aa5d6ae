"""CSV emission with fixed schemas and lossless number formatting."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import NonFiniteError

SCHEMA_VERSION = 1

# column name -> unit, in output order (hbar = 1 natural units)
SCHEMAS: dict[str, tuple[tuple[str, str], ...]] = {
    "fields": (
        ("x", "length"), ("t", "time"), ("re_psi", "length^-1/2"), ("im_psi", "length^-1/2"),
        ("rho", "length^-1"), ("p_bohm", "momentum"), ("p_osmotic", "momentum"), ("q_pot", "energy"),
        ("e_bohm", "energy"), ("hj_residual", "energy"),
    ),
    "trajectories": (("traj_id", "1"), ("t", "time"), ("x", "length"), ("status", "label")),
    "weak_scan": (
        ("plane_k", "1"), ("t", "time"), ("y", "length"), ("bin_j", "1"), ("x", "length"),
        ("w_true_re", "momentum"), ("w_true_im", "momentum"), ("p_right", "1"), ("n_right", "count"),
        ("n_left", "count"), ("w_est", "momentum"), ("missing_flag", "0/1"),
    ),
    "reconstructed": (("traj_id", "1"), ("plane_k", "1"), ("y", "length"), ("x", "length"),
                      ("terminated_flag", "0/1")),
    "compare": (("traj_id", "1"), ("rms", "length"), ("max_dev", "length"), ("planes_used", "count")),
    "mode_beable": (("t", "time"), ("re_q", "amplitude"), ("im_q", "amplitude"), ("abs_q", "amplitude")),
}


def format_value(value) -> str:
    """17 significant digits for floats; ``None`` becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise NonFiniteError(f"non-finite value {v!r}")
        return format(v, ".17g")
    return str(value)


def header_line(schema: str) -> str:
    units = " ".join(f"{name}[{unit}]" for name, unit in SCHEMAS[schema])
    return f"# weaktraj schema={schema} version={SCHEMA_VERSION} units: {units}"


def write_csv(path, schema: str, rows) -> Path:
    """Write ``rows`` (iterables in schema column order) to ``path``.

    Raises NonFiniteError, naming the row and column, before anything is
    written if a numeric cell is NaN or Inf.
    """
    columns = [name for name, _ in SCHEMAS[schema]]
    lines = []
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != len(columns):
            raise ValueError(f"{schema}: row {i} has {len(row)} cells, expected {len(columns)}")
        try:
            lines.append([format_value(v) for v in row])
        except NonFiniteError as exc:
            col = next(c for c, v in zip(columns, row) if isinstance(v, (float, np.floating))
                       and not math.isfinite(float(v)))
            raise NonFiniteError(f"{schema}: {exc} in row {i}, column {col!r}") from None
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(header_line(schema) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(lines)
    return path


def read_csv(path):
    """Return (header_comment, column_names, rows-as-string-lists)."""
    with Path(path).open(newline="") as fh:
        comment = fh.readline().rstrip("\n")
        reader = csv.reader(fh)
        columns = next(reader)
        return comment, columns, list(reader)
