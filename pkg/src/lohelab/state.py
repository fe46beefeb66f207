"""Shared value types for the simulation: coupling sets, ensemble states,
run parameters.

Ensemble members are stored row-wise as canonical flat vectors (one
Fortran-order raveled tensor per row), which is what the batched right-hand
side and every diagnostic operate on.  States are immutable snapshots: the
integrator builds fresh ones and never mutates arrays in place, so states
are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import reshape
from .tensors import as_tensor, check_dims, vec

__all__ = ["CouplingSet", "EnsembleState", "SimParams"]


class CouplingSet:
    """Map from coupling words to real strengths; absent words mean zero.

    ``aggregation_regime`` records whether the all-zeros strength is
    strictly positive and every other strength nonnegative, the regime in
    which the variance functional drives the ensemble to a one-point or
    two-pole concentration.
    """

    __slots__ = ("rank", "strengths")

    def __init__(self, rank: int, strengths):
        rank = int(rank)
        if rank < 0:
            raise ValueError("rank must be >= 0")
        clean = {}
        for bits, kappa in dict(strengths).items():
            word = reshape.check_word(bits, rank)
            kappa = float(kappa)
            if not math.isfinite(kappa):
                raise ValueError(f"coupling strength for {word} is not finite")
            if kappa != 0.0:
                clean[word] = kappa
        self.rank = rank
        self.strengths = clean

    @classmethod
    def from_strings(cls, mapping, rank: Optional[int] = None) -> "CouplingSet":
        """Build from bitmask-string keys ('' is the rank-0 word)."""
        items = {reshape.word_from_string(k): v for k, v in mapping.items()}
        if rank is None:
            if not items:
                raise ValueError("cannot infer rank from an empty coupling map")
            ranks = {len(w) for w in items}
            if len(ranks) != 1:
                raise ValueError(f"inconsistent word lengths in coupling map: {sorted(ranks)}")
            rank = ranks.pop()
        return cls(rank, items)

    def to_strings(self) -> dict[str, float]:
        return {reshape.word_to_string(w): k for w, k in self.active()}

    def get(self, bits) -> float:
        return self.strengths.get(reshape.check_word(bits, self.rank), 0.0)

    def active(self) -> list[tuple[tuple[int, ...], float]]:
        """Nonzero couplings in ascending bitmask order."""
        return sorted(self.strengths.items())

    @property
    def aggregation_regime(self) -> bool:
        zero_word = (0,) * self.rank
        if self.strengths.get(zero_word, 0.0) <= 0.0:
            return False
        return all(k >= 0.0 for w, k in self.strengths.items() if w != zero_word)

    @property
    def nonnegative(self) -> bool:
        return all(k >= 0.0 for k in self.strengths.values())

    def __eq__(self, other):
        if not isinstance(other, CouplingSet):
            return NotImplemented
        return self.rank == other.rank and self.strengths == other.strengths

    def __repr__(self):
        return f"CouplingSet(rank={self.rank}, strengths={self.to_strings()})"


class EnsembleState:
    """N same-shape tensors plus the simulation clock.

    ``vecs`` is the (N, D) matrix of canonical flat vectors.  ``ref_norms``
    holds the member norms the run is measured against (the flow conserves
    them); they are captured at construction and carried unchanged through
    integration steps so drift is always relative to the initial data.
    """

    __slots__ = ("dims", "vecs", "time", "ref_norms")

    def __init__(self, dims, vecs, time: float = 0.0, ref_norms=None):
        dims = check_dims(dims)
        size = math.prod(dims) if dims else 1
        vecs = np.array(vecs, dtype=np.complex128, copy=True)
        if vecs.ndim != 2 or vecs.shape[1] != size:
            raise ValueError(f"expected member matrix of shape (N, {size}), got {vecs.shape}")
        if vecs.shape[0] < 1:
            raise ValueError("ensemble must have at least one member")
        if not np.all(np.isfinite(vecs.real)) or not np.all(np.isfinite(vecs.imag)):
            raise ValueError("ensemble has non-finite entries")
        if ref_norms is None:
            ref_norms = np.linalg.norm(vecs, axis=1)
        else:
            ref_norms = np.array(ref_norms, dtype=float, copy=True)
            if ref_norms.shape != (vecs.shape[0],):
                raise ValueError("ref_norms must have one entry per member")
        vecs.flags.writeable = False
        ref_norms.flags.writeable = False
        self.dims = dims
        self.vecs = vecs
        self.time = float(time)
        self.ref_norms = ref_norms

    @classmethod
    def from_tensors(cls, tensors, time: float = 0.0) -> "EnsembleState":
        ts = [as_tensor(t) for t in tensors]
        if not ts:
            raise ValueError("ensemble is empty")
        dims = ts[0].shape
        for t in ts[1:]:
            if t.shape != dims:
                raise ValueError(f"shape mismatch in ensemble: {t.shape} vs {dims}")
        return cls(dims, np.stack([vec(t) for t in ts]), time=time)

    @property
    def n_members(self) -> int:
        return self.vecs.shape[0]

    @property
    def size(self) -> int:
        return self.vecs.shape[1]

    def member(self, j: int) -> np.ndarray:
        return self.vecs[j].reshape(self.dims, order="F")

    def tensors(self) -> list[np.ndarray]:
        return [self.member(j) for j in range(self.n_members)]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vecs, axis=1)

    def replace(self, vecs, time) -> "EnsembleState":
        """Fresh state with the same shape and reference norms."""
        return EnsembleState(self.dims, vecs, time=time, ref_norms=self.ref_norms)

    def __repr__(self):
        return f"EnsembleState(dims={self.dims}, n_members={self.n_members}, time={self.time})"


@dataclass(frozen=True)
class SimParams:
    """Fixed-step run parameters.

    The free flow, when present, is one operator shared by every member
    (heterogeneous per-member flows are out of scope).  ``sample_stride``
    controls how often diagnostics records are emitted; None keeps only the
    initial and final records.  With ``renormalize`` off, member norms are
    monitored against ``drift_tolerance`` and a drift beyond it aborts the
    run; with it on, members are rescaled to their reference norms after
    every step.
    """

    couplings: CouplingSet
    dt: float
    horizon: float
    free_flow: Optional[object] = None
    renormalize: bool = False
    drift_tolerance: float = 1e-6
    sample_stride: Optional[int] = 1
    debug: bool = False

    def __post_init__(self):
        if not isinstance(self.couplings, CouplingSet):
            raise TypeError("couplings must be a CouplingSet")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if self.horizon < 0.0 or not math.isfinite(self.horizon):
            raise ValueError("horizon must be >= 0 and finite")
        if self.horizon > 0.0 and self.dt > self.horizon * (1 + 1e-12):
            raise ValueError("dt must not exceed the horizon")
        if not (self.drift_tolerance > 0.0):
            raise ValueError("drift tolerance must be positive")
        if self.sample_stride is not None and self.sample_stride < 1:
            raise ValueError("sample stride must be >= 1 (or None)")
        if self.free_flow is not None and isinstance(self.free_flow, (list, tuple)):
            raise ValueError(
                "per-member free flows are not supported; the model uses one shared operator"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt)) if self.horizon > 0 else 0
