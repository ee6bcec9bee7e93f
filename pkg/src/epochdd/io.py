"""CSV helpers.

Floats are written with 17 significant digits, which round-trips every
64-bit float exactly; integer columns are written as plain integers.  Reading
a file back and writing it again therefore reproduces the same bytes.
"""

import csv
from pathlib import Path

import numpy as np


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_columns(path, columns):
    """Write a mapping ``name -> 1-D sequence`` as a headed CSV file."""
    names = list(columns)
    arrays = [np.asarray(columns[name]).ravel() for name in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(names)]
    for row in zip(*(a.tolist() for a in arrays)):
        lines.append(",".join(_format(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse(text):
    try:
        value = int(text)
    except ValueError:
        return float(text)
    # "-0" is a float zero; keep its sign
    return value if str(value) == text else float(text)


def read_columns(path):
    """Inverse of :func:`write_columns`.

    Columns whose entries all parse as integers come back as ``int64``
    arrays, the rest as ``float64``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[_parse(cell) for cell in row] for row in reader]
    out = {}
    for j, name in enumerate(names):
        values = [row[j] for row in rows]
        if all(isinstance(v, int) for v in values):
            out[name] = np.array(values, dtype=np.int64)
        else:
            out[name] = np.array(values, dtype=float)
    return out
