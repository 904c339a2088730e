"""CSV and JSON readers/writers for matrices, samples and fit summaries."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .linalg import SymMatrix

SYMMETRY_RTOL = 1e-12


def _rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows


def _read_table(path, header: bool | None = None) -> tuple[np.ndarray, list | None]:
    """Numeric table with an optional first row of labels.

    ``header=None`` treats the first row as labels only when it is not
    all numeric.
    """
    rows = _rows(path)
    if header is None:
        try:
            [float(x) for x in rows[0]]
            header = False
        except ValueError:
            header = True
    names = None
    if header:
        names, rows = [h.strip() for h in rows[0]], rows[1:]
    try:
        values = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if values.ndim != 2 or (names is not None and values.shape[1] != len(names)):
        raise ValueError(f"{path}: ragged rows or header/column mismatch")
    return values, names


def _labels_from_header(header):
    if header is None:
        return None
    try:
        return [int(h) for h in header]
    except ValueError:
        return header


def read_matrix_csv(path) -> SymMatrix:
    """Read a symmetric matrix; a header row of labels is optional.

    A file with one more row than columns is taken to start with a
    header, so numeric labels work.  Asymmetry beyond ``SYMMETRY_RTOL``
    (relative to the largest entry) is an error; smaller discrepancies
    are symmetrized away.
    """
    rows = _rows(path)
    a, header = _read_table(path, True if len(rows) == len(rows[0]) + 1 else None)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: matrix is {a.shape[0]}x{a.shape[1]}, not square")
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{path}: matrix is not symmetric")
    return SymMatrix((a + a.T) / 2, _labels_from_header(header))


def write_matrix_csv(path, m: SymMatrix, header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(m.labels)
        for row in np.asarray(m):
            w.writerow([format(x, ".17g") for x in row])


def read_samples_csv(path, header: bool | None = None) -> tuple[np.ndarray, list | None]:
    """Samples as rows, variables as columns, optional header of labels.

    A header of purely numeric labels must be announced with ``header=True``.
    """
    values, header = _read_table(path, header)
    return values, _labels_from_header(header)


def write_fit_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
