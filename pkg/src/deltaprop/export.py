"""Delimited-text output with a provenance header.

Every file opens with ``#``-prefixed ``key: value`` lines, then one header
row, then comma-separated rows with floats written as ``%.17g`` so a reread
reproduces the doubles exactly.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

from . import __version__


def sha256_of(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def header_lines(meta):
    lines = [f"# tool: deltaprop {__version__}"]
    for key, value in meta.items():
        lines.append(f"# {key}: {value}")
    return lines


def write_table(path, meta, columns, rows):
    path = Path(path)
    lines = header_lines(meta)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_table(path):
    """``(meta, columns, rows)`` with rows as lists of strings."""
    meta, columns, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, columns, rows


def write_state(path, meta, psi):
    x = psi.grid.interior
    rows = zip(x, psi.values.real, psi.values.imag)
    return write_table(path, meta, ["x", "re", "im"], rows)


def read_state_values(path):
    """``(x, values)`` from a file written by :func:`write_state`."""
    _, columns, rows = read_table(path)
    if columns != ["x", "re", "im"]:
        raise ValueError(f"{path}: expected columns x,re,im, got {columns}")
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]
