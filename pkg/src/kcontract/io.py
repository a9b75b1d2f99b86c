"""JSON/CSV forms of matrices, subspace pairs and graphs.

Matrices are ``{"rows": r, "cols": c, "data": [[...], ...]}`` in JSON, or
headerless CSV with one matrix row per line.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .decompose import SubspacePair


class InputError(ValueError):
    """Malformed matrix, vector, pair or graph input."""


def matrix_from_data(data) -> np.ndarray:
    if isinstance(data, dict):
        if "data" not in data:
            raise InputError("matrix JSON needs a 'data' field")
        rows = data["data"]
    else:
        rows = data
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("matrix data must be a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise InputError("matrix rows must be non-empty and all of the same length")
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix entries must be numbers: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix has non-finite entries")
    if isinstance(data, dict):
        r, c = data.get("rows", arr.shape[0]), data.get("cols", arr.shape[1])
        if (r, c) != arr.shape:
            raise InputError(f"declared shape {r}x{c} does not match data {arr.shape[0]}x{arr.shape[1]}")
    return arr


def matrix_to_data(a) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": a.tolist()}


def _parse_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        parsed = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise InputError(f"CSV matrix entries must be numbers: {exc}") from None
    return matrix_from_data(parsed)


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if path.suffix.lower() == ".csv":
        return _parse_csv(text)
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return _parse_csv(text)
    return matrix_from_data(data)


def write_matrix(a, path=None, fmt: str = "json") -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf).writerows([[repr(float(v)) for v in row] for row in a])
        text = buf.getvalue()
    else:
        text = json.dumps(matrix_to_data(a))
    if path is not None:
        Path(path).write_text(text)
    return text


def read_vector(path) -> np.ndarray:
    """A vector as a JSON list, a one-row/one-column matrix, or CSV."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = None
    if isinstance(data, list) and all(isinstance(v, (int, float)) for v in data):
        v = np.array(data, dtype=float)
    else:
        m = matrix_from_data(data) if data is not None else _parse_csv(text)
        if min(m.shape) != 1:
            raise InputError("expected a vector (one row or one column)")
        v = m.reshape(-1)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise InputError("vector must be non-empty and finite")
    return v


def read_pair(path) -> SubspacePair:
    """``{"U": matrix, "V": matrix}``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read pair from {path}: {exc}") from None
    if not isinstance(data, dict) or "U" not in data or "V" not in data:
        raise InputError("pair JSON needs 'U' and 'V' matrices")
    try:
        return SubspacePair(U=matrix_from_data(data["U"]), V=matrix_from_data(data["V"]))
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None


def write_pair(pair: SubspacePair, path) -> None:
    Path(path).write_text(json.dumps(pair.to_dict()))


def read_edges(path) -> list:
    """Edge list CSV ``from,to,weight`` with 1-based agent indices; a header row is allowed."""
    try:
        rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    edges = []
    for i, r in enumerate(rows):
        if not r or not any(c.strip() for c in r):
            continue
        if len(r) == 1 or len(r) > 3:
            raise InputError(f"edge row {i + 1} must be 'from,to[,weight]'")
        try:
            a, b = int(r[0]), int(r[1])
            w = float(r[2]) if len(r) == 3 else 1.0
        except ValueError:
            if i == 0:
                continue
            raise InputError(f"edge row {i + 1} is not numeric") from None
        if a < 1 or b < 1 or not math.isfinite(w):
            raise InputError(f"edge row {i + 1}: indices are 1-based and weights finite")
        edges.append((a, b, w))
    if not edges:
        raise InputError("edge list is empty")
    return edges
