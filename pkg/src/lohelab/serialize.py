"""JSON serialization of tensors and matrices.

Format (schema_version 1): an object with a shape header followed by the
entries as [re, im] float64 pairs listed in the canonical first-index-fastest
order of `lohelab.tensors`:

    {"schema_version": 1, "kind": "tensor", "dims": [2, 3],
     "entries": [[1.0, 0.0], [0.5, -0.25], ...]}

Matrices use kind "matrix" with "rows"/"cols" instead of "dims" and entries
in column-major (first index fastest) order.  Ensembles are a list of
tensors sharing one shape header.
"""

from __future__ import annotations

import json

import numpy as np

from .tensors import as_tensor, check_dims, total_size, unvec, vec

SCHEMA_VERSION = 1

__all__ = [
    "tensor_to_dict",
    "tensor_from_dict",
    "save_tensor",
    "load_tensor",
    "matrix_to_dict",
    "matrix_from_dict",
    "save_matrix",
    "load_matrix",
    "ensemble_to_dict",
    "ensemble_from_dict",
]


def _entries(flat) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_entries(entries, size) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.shape != (size, 2):
        raise ValueError(f"expected {size} [re, im] pairs, got array of shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def _check_header(obj, kind):
    if not isinstance(obj, dict):
        raise ValueError(f"expected a JSON object for a {kind}")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {obj.get('schema_version')!r}")
    if obj.get("kind") != kind:
        raise ValueError(f"expected kind {kind!r}, got {obj.get('kind')!r}")


def tensor_to_dict(t) -> dict:
    t = as_tensor(t)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "tensor",
        "dims": list(t.shape),
        "entries": _entries(vec(t)),
    }


def tensor_from_dict(obj) -> np.ndarray:
    _check_header(obj, "tensor")
    dims = check_dims(obj["dims"])
    flat = _from_entries(obj["entries"], total_size(dims))
    return as_tensor(unvec(flat, dims))


def matrix_to_dict(mat) -> dict:
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {mat.shape}")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "matrix",
        "rows": mat.shape[0],
        "cols": mat.shape[1],
        "entries": _entries(mat.ravel(order="F")),
    }


def matrix_from_dict(obj) -> np.ndarray:
    _check_header(obj, "matrix")
    rows, cols = int(obj["rows"]), int(obj["cols"])
    if rows < 1 or cols < 1:
        raise ValueError(f"invalid matrix dimensions {rows} x {cols}")
    flat = _from_entries(obj["entries"], rows * cols)
    mat = flat.reshape((rows, cols), order="F")
    if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
        raise ValueError("matrix has non-finite entries")
    return mat


def ensemble_to_dict(tensors) -> dict:
    ts = [as_tensor(t) for t in tensors]
    if not ts:
        raise ValueError("ensemble is empty")
    dims = ts[0].shape
    for t in ts[1:]:
        if t.shape != dims:
            raise ValueError(f"shape mismatch in ensemble: {t.shape} vs {dims}")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "ensemble",
        "dims": list(dims),
        "members": [_entries(vec(t)) for t in ts],
    }


def ensemble_from_dict(obj) -> list[np.ndarray]:
    _check_header(obj, "ensemble")
    dims = check_dims(obj["dims"])
    size = total_size(dims)
    return [as_tensor(unvec(_from_entries(e, size), dims)) for e in obj["members"]]


def save_tensor(path, t):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tensor_to_dict(t), fh)


def load_tensor(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return tensor_from_dict(json.load(fh))


def save_matrix(path, mat):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_dict(mat), fh)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return matrix_from_dict(json.load(fh))
