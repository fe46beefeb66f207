"""Axis-partition reshaping of rank-m tensors into matrices.

A coupling word ``i = (i_1, ..., i_m)`` with bits in {0, 1} splits the axes
into the zero set I0 (bits 0, ascending) and the one set I1 (bits 1,
ascending).  The word's permutation lists I0 then I1; pushing a tensor
through it and flattening each group first-index-fastest yields a
``rows x cols`` matrix with ``rows = prod(dims[I0])``, ``cols =
prod(dims[I1])``.  The rearrangement is a bijection on entries, hence an
exact Frobenius isometry, and for a word whose bits are already sorted
(all zeros before all ones, the standard form) the permutation is the
identity and matricization is a plain Fortran-order reshape.

Under this matricization the cubic contraction of `lohelab.tensors` becomes
an ordinary triple matrix product:

    matricize(contract_cubic(a, b, c, i)) = M(a) @ M(b)^H @ M(c)

which `cubic_fast` exploits; it must agree with the reference contraction to
floating-point roundoff and is cross-checked in the test suite.

Plans are cached per (shape, word): the simulation right-hand side asks for
the same handful of plans every step.  Cache insertion is first-writer-wins
and safe for concurrent readers.
"""

from __future__ import annotations

import math

import numpy as np

from .tensors import check_dims, unvec, vec

__all__ = [
    "check_word",
    "complement",
    "word_from_string",
    "word_to_string",
    "all_words",
    "is_standard",
    "ReshapePlan",
    "plan",
    "matricize",
    "dematricize",
    "cubic_fast",
]


def check_word(bits, rank=None) -> tuple[int, ...]:
    """Validate a binary coupling word, optionally against a tensor rank."""
    word = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in word):
        raise ValueError(f"coupling word must be binary, got {word}")
    if rank is not None and len(word) != rank:
        raise ValueError(f"coupling word {word} does not match rank {rank}")
    return word


def complement(bits) -> tuple[int, ...]:
    return tuple(1 - b for b in check_word(bits))


def word_from_string(s: str) -> tuple[int, ...]:
    """Parse a bitmask string; leftmost character is the first axis.
    The empty string is the rank-0 word."""
    if any(ch not in "01" for ch in s):
        raise ValueError(f"bitmask string must contain only 0/1, got {s!r}")
    return tuple(int(ch) for ch in s)


def word_to_string(bits) -> str:
    return "".join(str(b) for b in check_word(bits))


def all_words(rank: int) -> list[tuple[int, ...]]:
    """All 2^m coupling words in ascending bitmask (lexicographic) order."""
    if rank < 0:
        raise ValueError("rank must be >= 0")
    out = []
    for n in range(2**rank):
        out.append(tuple((n >> (rank - 1 - k)) & 1 for k in range(rank)))
    return sorted(out)


def is_standard(bits) -> bool:
    """True when all zero bits precede all one bits."""
    word = check_word(bits)
    return list(word) == sorted(word)


class ReshapePlan:
    """Precomputed rearrangement for one (shape, word) pair.

    ``gather`` maps flat canonical offsets so that
    ``vec(permuted) = vec(t)[gather]``; ``scatter`` is its inverse.
    """

    __slots__ = ("dims", "bits", "zero_axes", "one_axes", "perm", "rows", "cols", "gather", "scatter")

    def __init__(self, dims, bits):
        dims = check_dims(dims)
        word = check_word(bits, len(dims))
        zero_axes = tuple(k for k, b in enumerate(word) if b == 0)
        one_axes = tuple(k for k, b in enumerate(word) if b == 1)
        perm = zero_axes + one_axes
        rows = math.prod(dims[k] for k in zero_axes)
        cols = math.prod(dims[k] for k in one_axes)
        size = math.prod(dims) if dims else 1
        gather = np.arange(size).reshape(dims, order="F").transpose(perm).ravel(order="F")
        scatter = np.argsort(gather)
        gather.flags.writeable = False
        scatter.flags.writeable = False
        self.dims = dims
        self.bits = word
        self.zero_axes = zero_axes
        self.one_axes = one_axes
        self.perm = perm
        self.rows = rows
        self.cols = cols
        self.gather = gather
        self.scatter = scatter

    def __eq__(self, other):
        if not isinstance(other, ReshapePlan):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.bits == other.bits
            and self.zero_axes == other.zero_axes
            and self.one_axes == other.one_axes
            and self.perm == other.perm
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.gather, other.gather)
            and np.array_equal(self.scatter, other.scatter)
        )

    def __repr__(self):
        return f"ReshapePlan(dims={self.dims}, bits={self.bits}, rows={self.rows}, cols={self.cols})"


_PLAN_CACHE: dict[tuple, ReshapePlan] = {}


def plan(dims, bits) -> ReshapePlan:
    """Cached plan for one (shape, word) pair."""
    key = (tuple(dims), tuple(bits))
    hit = _PLAN_CACHE.get(key)
    if hit is None:
        hit = _PLAN_CACHE.setdefault(key, ReshapePlan(dims, bits))
    return hit


def matricize(t, p: ReshapePlan) -> np.ndarray:
    """Rearrange a tensor into the plan's rows x cols matrix.

    Pure entry permutation: the result holds exactly the same floats,
    so the Frobenius norm is preserved bit for bit.
    """
    t = np.asarray(t)
    if t.shape != p.dims:
        raise ValueError(f"tensor shape {t.shape} does not match plan dims {p.dims}")
    return vec(t)[p.gather].reshape(p.cols, p.rows).T


def dematricize(mat, p: ReshapePlan) -> np.ndarray:
    """Exact inverse of `matricize`."""
    mat = np.asarray(mat)
    if mat.shape != (p.rows, p.cols):
        raise ValueError(f"matrix shape {mat.shape} does not match plan ({p.rows}, {p.cols})")
    return unvec(mat.T.ravel()[p.scatter], p.dims)


def cubic_fast(a, b, c, bits) -> np.ndarray:
    """Cubic contraction as a triple matrix product (fast path).

    Equivalent to `lohelab.tensors.contract_cubic` up to roundoff.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if not (a.shape == b.shape == c.shape):
        raise ValueError(f"shape mismatch: {a.shape}, {b.shape}, {c.shape}")
    p = plan(a.shape, bits)
    product = matricize(a, p) @ matricize(b, p).conj().T @ matricize(c, p)
    return dematricize(product, p)
