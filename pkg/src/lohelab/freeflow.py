"""Norm-preserving linear free flow and the solution-splitting check.

The generator is a rank-2m coefficient array A acting on rank-m tensors by
``(A T)[a] = sum_b A[a, b] T[b]`` over multi-indices.  Under the canonical
flat offset this action is an ordinary D x D matrix-vector product, and the
paired skew symmetry ``A[a, b] = -conj(A[b, a])`` makes the matricized form
skew-Hermitian, so ``exp(A t)`` is unitary and the flow conserves every
Frobenius norm.  Operators are therefore STORED matricized; exponentials are
computed with scipy's scaling-and-squaring Pade implementation
(``scipy.linalg.expm``) and cached per evaluation time.

``ssp_residual`` measures, for one coupling word and one time, how far the
flow is from commuting through the cubic coupling.  When the residual
vanishes for every active word (and every time), solutions of the coupled
system with free flow factor exactly as ``T_j(t) = exp(A t) S_j(t)`` with
S_j solving the coupling-only system; ``ssp_check`` samples the residual
over a time grid (a numerical stand-in for the for-all-t condition, not a
proof) and ``split_verify`` confirms the factorization on integrated
trajectories.

Named constructors cover the classic low-rank families:

* ``kuramoto(nu)``      -- rank 0, A = i*nu.
* ``sphere(omega)``     -- rank 1, A = omega with omega real antisymmetric.
* ``matrix(h)``         -- rank 2, A[a, b, g, d] = (-i h)[a, g] * delta[b, d]
                           with h Hermitian, i.e. kron(I, -i h) matricized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import dynamics, reshape
from .state import CouplingSet, EnsembleState, SimParams
from .tensors import as_tensor, check_dims, total_size, unvec, vec

__all__ = [
    "FreeFlowOp",
    "free_flow_solve",
    "ssp_residual",
    "ssp_check",
    "split_verify",
    "SspReport",
    "DEFAULT_SSP_TIMES",
    "SSP_DIM_CAP",
]

DEFAULT_SSP_TIMES = (0.1, 0.5, 1.0, 2.0, 5.0)

# ssp_residual materializes a D^4-entry array; keep D small.
SSP_DIM_CAP = 8

_SKEW_ATOL = 1e-12


class FreeFlowOp:
    """Skew-Hermitian free-flow generator for a fixed tensor shape.

    Any square matrix is accepted and projected onto its skew-Hermitian part
    (M - M^H)/2; a discarded Hermitian part larger than 1e-12 triggers a
    warning, since a violated skew condition silently breaks every
    conservation property downstream.
    """

    def __init__(self, dims, mat):
        dims = check_dims(dims)
        size = total_size(dims)
        mat = np.asarray(mat, dtype=np.complex128)
        if mat.shape != (size, size):
            raise ValueError(f"expected a {size} x {size} matrix for dims {dims}, got {mat.shape}")
        if not np.all(np.isfinite(mat.real)) or not np.all(np.isfinite(mat.imag)):
            raise ValueError("free-flow matrix has non-finite entries")
        skew = 0.5 * (mat - mat.conj().T)
        discarded = float(np.linalg.norm(0.5 * (mat + mat.conj().T)))
        if discarded > _SKEW_ATOL:
            warnings.warn(
                f"free-flow matrix was not skew-Hermitian (discarded Hermitian part "
                f"has norm {discarded:.3e}); projected",
                stacklevel=2,
            )
        skew.flags.writeable = False
        self.dims = dims
        self.dim = size
        self.mat = skew
        self._exp_cache: dict[float, np.ndarray] = {}

    @property
    def rank(self) -> int:
        return len(self.dims)

    @classmethod
    def kuramoto(cls, nu: float) -> "FreeFlowOp":
        """Rank-0 phase rotation at angular frequency nu."""
        return cls((), np.array([[1j * float(nu)]]))

    @classmethod
    def sphere(cls, omega) -> "FreeFlowOp":
        """Rank-1 rotation generator; omega must be real antisymmetric."""
        omega = np.asarray(omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ValueError(f"omega must be square, got shape {omega.shape}")
        return cls((omega.shape[0],), omega.astype(np.complex128))

    @classmethod
    def matrix(cls, h) -> "FreeFlowOp":
        """Rank-2 generator of U -> -i h U with h Hermitian (d x d states)."""
        h = np.asarray(h, dtype=np.complex128)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"h must be square, got shape {h.shape}")
        herm = 0.5 * (h + h.conj().T)
        if np.linalg.norm(h - herm) > _SKEW_ATOL:
            warnings.warn("h was not Hermitian; using its Hermitian part", stacklevel=2)
        d = h.shape[0]
        return cls((d, d), np.kron(np.eye(d), -1j * herm))

    @classmethod
    def from_matrix(cls, dims, mat) -> "FreeFlowOp":
        return cls(dims, mat)

    def tensor(self) -> np.ndarray:
        """The generator as a rank-2m array (row multi-index first)."""
        return self.mat.reshape(self.dims * 2, order="F")

    def expm(self, t: float) -> np.ndarray:
        """exp(A t), cached per time."""
        t = float(t)
        hit = self._exp_cache.get(t)
        if hit is None:
            if not math.isfinite(t):
                raise ValueError("time must be finite")
            hit = scipy.linalg.expm(t * self.mat)
            hit.flags.writeable = False
            self._exp_cache[t] = hit
        return hit

    def apply(self, t) -> np.ndarray:
        """The generator action A T on a tensor."""
        t = as_tensor(t, self.dims)
        return unvec(self.mat @ vec(t), self.dims)

    def __repr__(self):
        return f"FreeFlowOp(dims={self.dims}, dim={self.dim})"


def free_flow_solve(op: FreeFlowOp, t0, t: float) -> np.ndarray:
    """Propagate a tensor under the pure free flow: exp(A t) applied to t0."""
    t0 = as_tensor(t0, op.dims)
    return unvec(op.expm(t) @ vec(t0), op.dims)


def ssp_residual(op: FreeFlowOp, bits, t: float, dim_cap: int = SSP_DIM_CAP) -> float:
    """Frobenius norm of the splitting consistency defect for one word.

    Contracts the four flow exponentials against each other and subtracts
    the target double Kronecker delta; the full defect array has D^4 entries,
    so D is capped (default 8).
    """
    word = reshape.check_word(bits, op.rank)
    size = op.dim
    if size > dim_cap:
        raise ValueError(
            f"flat dimension {size} exceeds the residual cap {dim_cap}; "
            "use smaller tensor dimensions for the splitting check"
        )
    fwd = op.expm(t)
    bwd = op.expm(-t)
    m = op.rank
    if m == 0:
        value = bwd[0, 0] * fwd[0, 0] * bwd[0, 0] * fwd[0, 0]
        return float(abs(value - 1.0))
    fwd_t = fwd.reshape(op.dims * 2, order="F")
    bwd_t = bwd.reshape(op.dims * 2, order="F")
    a0 = list(range(0, m))
    a1 = list(range(m, 2 * m))
    b0 = list(range(2 * m, 3 * m))
    b1 = list(range(3 * m, 4 * m))
    g0 = list(range(4 * m, 5 * m))
    g1 = list(range(5 * m, 6 * m))
    mixed_in = [b1[k] if word[k] else b0[k] for k in range(m)]
    mixed_out = [g1[k] if word[k] else g0[k] for k in range(m)]
    comp_in = [b0[k] if word[k] else b1[k] for k in range(m)]
    comp_out = [g0[k] if word[k] else g1[k] for k in range(m)]
    lhs = np.einsum(
        bwd_t, a0 + b0,
        fwd_t, mixed_in + mixed_out,
        bwd_t, a1 + b1,
        fwd_t, comp_in + comp_out,
        a0 + a1 + g0 + g1,
        optimize=True,
    )
    eye = np.eye(size)
    target = np.einsum("pr,qs->pqrs", eye, eye).reshape(op.dims * 4, order="F")
    return float(np.linalg.norm((lhs - target).ravel()))


@dataclass(frozen=True)
class SspReport:
    bits: tuple[int, ...]
    passed: bool
    max_residual: float
    residual_by_time: dict


def ssp_check(
    op: FreeFlowOp,
    couplings: CouplingSet,
    times=DEFAULT_SSP_TIMES,
    tol: float = 1e-10,
    dim_cap: int = SSP_DIM_CAP,
) -> dict[tuple[int, ...], SspReport]:
    """Sample the splitting residual for every active coupling word.

    PASS means the residual stayed below tol at every sampled time; this is
    a numerical check at the chosen times, not a proof of the for-all-t
    condition.
    """
    times = [float(t) for t in times]
    if not times:
        raise ValueError("need at least one sample time")
    reports = {}
    for word, _ in couplings.active():
        by_time = {t: ssp_residual(op, word, t, dim_cap=dim_cap) for t in times}
        worst = max(by_time.values())
        reports[word] = SspReport(word, worst <= tol, worst, by_time)
    return reports


def split_verify(
    op: FreeFlowOp,
    couplings: CouplingSet,
    init: EnsembleState,
    horizon: float,
    dt: float,
    sample_stride: int = 10,
) -> float:
    """Integrate the full and coupling-only systems from the same data and
    return the worst deviation of T_j(t) from exp(A t) S_j(t)."""
    if init.dims != op.dims:
        raise ValueError(f"state dims {init.dims} do not match operator dims {op.dims}")
    full = SimParams(couplings=couplings, dt=dt, horizon=horizon, free_flow=op, sample_stride=None)
    bare = SimParams(couplings=couplings, dt=dt, horizon=horizon, free_flow=None, sample_stride=None)
    state_full = init
    state_bare = init
    worst = 0.0
    n_steps = full.n_steps
    for k in range(n_steps):
        state_full = dynamics.step(state_full, full)
        state_bare = dynamics.step(state_bare, bare)
        if (k + 1) % sample_stride == 0 or k + 1 == n_steps:
            propagated = state_bare.vecs @ op.expm(state_bare.time).T
            gap = np.linalg.norm(state_full.vecs - propagated, axis=1)
            worst = max(worst, float(gap.max()))
    return worst
