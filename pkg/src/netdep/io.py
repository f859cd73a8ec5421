"""Plain-text file formats.

One format per role:

* vector   -- single-column CSV with a one-word header, one value per line
* matrix   -- dense CSV, ``n`` rows of ``n`` comma-separated numbers, no header
* ensemble -- CSV with header ``node_0,...,node_{n-1}``, one replicate per row
* JSON     -- fitted models, covariance specs, test results, configs

Every reader raises :class:`~netdep.errors.FormatError` naming the file and
the offending line.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import FormatError


def _parse_float(token: str, path, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(path, line, f"not a number: {token!r}") from None
    if not math.isfinite(value):
        raise FormatError(path, line, f"non-finite value: {token!r}")
    return value


def _rows(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FormatError(path, None, f"cannot open: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, [f.strip() for f in next(csv.reader([stripped]))]


def read_vector(path) -> np.ndarray:
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise FormatError(path, None, "empty file; expected a header line") from None
    if len(header) != 1:
        raise FormatError(path, lineno, f"expected a single-column header, got {len(header)} columns")
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise FormatError(path, lineno, "missing header line (first row is numeric)")
    values = []
    for lineno, fields in rows:
        if len(fields) != 1:
            raise FormatError(path, lineno, f"expected 1 column, got {len(fields)}")
        values.append(_parse_float(fields[0], path, lineno))
    if not values:
        raise FormatError(path, None, "no data rows")
    return np.asarray(values)


def write_vector(path, values, name: str = "value") -> None:
    values = np.asarray(values, dtype=float).ravel()
    with open(path, "w", newline="") as fh:
        fh.write(f"{name}\n")
        for v in values:
            fh.write(f"{float(v)!r}\n")


def read_matrix(path) -> np.ndarray:
    out = []
    width = None
    for lineno, fields in _rows(path):
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FormatError(path, lineno, f"expected {width} columns, got {len(fields)}")
        out.append([_parse_float(f, path, lineno) for f in fields])
    if not out:
        raise FormatError(path, None, "no data rows")
    if len(out) != width:
        raise FormatError(path, None, f"matrix is not square: {len(out)} rows x {width} columns")
    return np.asarray(out)


def write_matrix(path, matrix) -> None:
    matrix = np.asarray(matrix)
    integral = np.issubdtype(matrix.dtype, np.integer)
    with open(path, "w", newline="") as fh:
        for row in matrix:
            fh.write(",".join(str(int(v)) if integral else repr(float(v)) for v in row))
            fh.write("\n")


def read_ensemble(path) -> np.ndarray:
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise FormatError(path, None, "empty file; expected a header line") from None
    expected = [f"node_{i}" for i in range(len(header))]
    if header != expected:
        raise FormatError(path, lineno, "header must be node_0,...,node_{n-1}")
    out = []
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise FormatError(path, lineno, f"expected {len(header)} columns, got {len(fields)}")
        out.append([_parse_float(f, path, lineno) for f in fields])
    if not out:
        raise FormatError(path, None, "no data rows")
    return np.asarray(out)


def write_ensemble(path, samples) -> None:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"node_{i}" for i in range(samples.shape[1])) + "\n")
        for row in samples:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(path, None, f"cannot open: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.lineno, f"malformed JSON: {exc.msg}") from None


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
