"""Dense complex tensor primitives: layout, inner products, cubic contractions.

A rank-m tensor is a numpy ``complex128`` array of shape ``(d_1, ..., d_m)``;
rank 0 (shape ``()``) is a scalar.  The canonical flat layout, used for
offsets, matricization and serialization alike, is first-index-fastest
(Fortran order):

    offset(idx) = idx[0] + d_1*idx[1] + d_1*d_2*idx[2] + ...

Indices are 0-based throughout.  Component formulas written with the 1-based
convention of the synchronization literature translate as
``alpha_k in {1..d_k}``  <->  ``idx[k-1] in {0..d_k-1}``.

The cubic contraction implemented here takes a binary coupling word
``i = (i_1, ..., i_m)`` and three same-shape tensors a, b, c and returns

    out[a0] = sum_{a1} a[mix(a0,a1,i)] * conj(b[a1]) * c[mix(a0,a1,1-i)]

where ``mix`` picks, per axis k, the free index a0[k] when the word bit is 0
and the summed index a1[k] when it is 1.  `contract_cubic` evaluates that
defining sum directly and is the reference all faster routes are checked
against (`lohelab.reshape.cubic_fast` is the matrix-product equivalent).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "check_dims",
    "total_size",
    "strides_first_fastest",
    "linear_offset",
    "offset_to_index",
    "as_tensor",
    "vec",
    "unvec",
    "frobenius_inner",
    "frobenius_norm",
    "ensemble_diameter",
    "contract_cubic",
]


def check_dims(dims) -> tuple[int, ...]:
    """Validate a shape tuple (every extent >= 1; empty tuple is a scalar)."""
    out = tuple(int(d) for d in dims)
    if any(d < 1 for d in out):
        raise ValueError(f"tensor dimensions must all be >= 1, got {out}")
    return out


def total_size(dims) -> int:
    return math.prod(check_dims(dims))


def strides_first_fastest(dims) -> tuple[int, ...]:
    """Mixed-radix weights of the canonical layout: (1, d_1, d_1*d_2, ...)."""
    weights = []
    acc = 1
    for d in check_dims(dims):
        weights.append(acc)
        acc *= d
    return tuple(weights)


def linear_offset(idx, dims) -> int:
    """Canonical flat offset of a multi-index (first index fastest)."""
    dims = check_dims(dims)
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(dims):
        raise ValueError(f"index rank {len(idx)} does not match shape rank {len(dims)}")
    off = 0
    weight = 1
    for k, (i, d) in enumerate(zip(idx, dims)):
        if not 0 <= i < d:
            raise IndexError(f"index {i} out of bounds for axis {k} with extent {d}")
        off += i * weight
        weight *= d
    return off


def offset_to_index(offset, dims) -> tuple[int, ...]:
    """Inverse of `linear_offset`."""
    dims = check_dims(dims)
    offset = int(offset)
    size = math.prod(dims)
    if not 0 <= offset < size:
        raise IndexError(f"offset {offset} out of range [0, {size})")
    idx = []
    for d in dims:
        idx.append(offset % d)
        offset //= d
    return tuple(idx)


def as_tensor(data, dims=None) -> np.ndarray:
    """Coerce to a complex128 array, optionally checking the shape, and
    reject non-finite entries."""
    t = np.asarray(data, dtype=np.complex128)
    if dims is not None:
        dims = check_dims(dims)
        if t.shape != dims:
            raise ValueError(f"expected shape {dims}, got {t.shape}")
    if not np.all(np.isfinite(t.real)) or not np.all(np.isfinite(t.imag)):
        raise ValueError("tensor has non-finite entries")
    return t


def vec(t) -> np.ndarray:
    """Flatten in the canonical first-index-fastest order."""
    return np.ravel(t, order="F")


def unvec(v, dims) -> np.ndarray:
    """Inverse of `vec`."""
    dims = check_dims(dims)
    v = np.asarray(v)
    if v.size != math.prod(dims):
        raise ValueError(f"vector of size {v.size} cannot fill shape {dims}")
    return v.reshape(dims, order="F")


def frobenius_inner(a, b) -> complex:
    """Frobenius inner product, conjugate-linear in the FIRST argument:
    <a, b> = sum conj(a) * b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def ensemble_diameter(tensors) -> float:
    """Largest pairwise Frobenius distance over a nonempty ensemble."""
    ts = [np.asarray(t) for t in tensors]
    if not ts:
        raise ValueError("ensemble is empty")
    shape = ts[0].shape
    for t in ts[1:]:
        if t.shape != shape:
            raise ValueError(f"shape mismatch in ensemble: {t.shape} vs {shape}")
    best = 0.0
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            best = max(best, float(np.linalg.norm(ts[i] - ts[j])))
    return best


def _check_word(bits, rank) -> tuple[int, ...]:
    word = tuple(int(b) for b in bits)
    if len(word) != rank:
        raise ValueError(f"coupling word {word} does not match tensor rank {rank}")
    if any(b not in (0, 1) for b in word):
        raise ValueError(f"coupling word must be binary, got {word}")
    return word


# Per-(dims, word) offset tables: Z[p] collects the zero-axis part of flat
# offset p, O[p] the one-axis part, so Z + O == arange(D) and the three
# factor offsets of the defining sum are Z[r]+O[s], s, O[r]+Z[s].
_OFFSET_TABLES: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _offset_tables(dims, word):
    key = (dims, word)
    hit = _OFFSET_TABLES.get(key)
    if hit is not None:
        return hit
    size = math.prod(dims) if dims else 1
    if not dims:
        tables = (np.zeros(1, dtype=np.intp), np.zeros(1, dtype=np.intp))
    else:
        coords = np.array(np.unravel_index(np.arange(size), dims, order="F"))
        weights = np.asarray(strides_first_fastest(dims), dtype=np.intp)
        zero_part = np.zeros(size, dtype=np.intp)
        one_part = np.zeros(size, dtype=np.intp)
        for k, bit in enumerate(word):
            part = one_part if bit else zero_part
            part += coords[k] * weights[k]
        tables = (zero_part, one_part)
    return _OFFSET_TABLES.setdefault(key, tables)


def contract_cubic(a, b, c, bits) -> np.ndarray:
    """Reference cubic contraction for a coupling word (see module docstring).

    Evaluates the defining double sum over free and summed multi-indices via
    cached offset tables; cost and memory are O(D^2), intended for desk-scale
    shapes.  Degenerate words: all-zeros gives ``a * <b, c>``, all-ones gives
    ``<b, a> * c``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if not (a.shape == b.shape == c.shape):
        raise ValueError(f"shape mismatch: {a.shape}, {b.shape}, {c.shape}")
    dims = a.shape
    word = _check_word(bits, len(dims))
    zero_part, one_part = _offset_tables(dims, word)
    af, bf, cf = vec(a), vec(b), vec(c)
    terms = (
        af[zero_part[:, None] + one_part[None, :]]
        * np.conj(bf)[None, :]
        * cf[one_part[:, None] + zero_part[None, :]]
    )
    return unvec(terms.sum(axis=1), dims)
