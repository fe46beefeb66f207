"""Native low-rank aggregation models and their tensor embeddings.

Three classic models are implemented in their own coordinates and serve as
cross-validation oracles for the general tensor dynamics:

* Kuramoto phases:   theta_j' = nu + (kappa/N) sum_k sin(theta_k - theta_j)
* sphere vectors:    x_j' = Omega x_j
                            + (kappa/N) sum_k (<x_j,x_j> x_k - <x_k,x_j> x_j)
* unitary matrices:  U_j' = -i H U_j + (kappa/2N) sum_k (U_k - U_j U_k^H U_j)

Each embeds into the tensor model at rank 0, 1, 2 respectively.  The
coupling-strength dictionaries are exact and pinned by side-by-side runs:

* Kuramoto: the rank-0 cubic coupling expands (for unit-modulus scalars) to
  theta' = nu + 2*kappa_phase*(1/N) sum sin(theta_k - theta_j), so matching
  the native model requires kappa_phase = kappa/2.  (Derived by expanding
  the scalar coupling; not a free choice.)
* sphere: the rank-1 word (0) reproduces the native coupling verbatim,
  kappa_(0) = kappa; the word (1) strength stays zero.
* matrix: the word (0,1) coupling matricizes to
  kappa_01 (U_c U_j^H U_j - U_j U_c^H U_j), which on unitary states equals
  kappa_01 * (1/N) sum_k (U_k - U_j U_k^H U_j), so kappa_01 = kappa/2.

Matrix-model states are used as given: a d x d unitary has Frobenius norm
sqrt(d), so the embedded ensemble runs under the constant-norm convention
(reference norms sqrt(d)) rather than unit norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dynamics
from .freeflow import FreeFlowOp
from .state import CouplingSet, EnsembleState, SimParams

__all__ = [
    "KINDS",
    "Reduction",
    "kuramoto_reduction",
    "sphere_reduction",
    "matrix_reduction",
    "native_rhs",
    "native_step",
    "embed",
    "project",
    "cross_validate",
]

KINDS = ("kuramoto", "sphere", "matrix")

_UNIT_ATOL = 1e-9


@dataclass
class Reduction:
    """One native model together with its embedded tensor-model parameters."""

    kind: str
    dims: tuple[int, ...]
    free_flow: Optional[FreeFlowOp]
    couplings: CouplingSet
    native_kappa: float
    # tensor word (as bitmask string) -> multiple of the native coupling
    factors: dict[str, float]


def kuramoto_reduction(nu: float, kappa: float) -> Reduction:
    return Reduction(
        kind="kuramoto",
        dims=(),
        free_flow=FreeFlowOp.kuramoto(nu),
        couplings=CouplingSet(0, {(): 0.5 * kappa}),
        native_kappa=float(kappa),
        factors={"": 0.5},
    )


def sphere_reduction(omega, kappa: float) -> Reduction:
    op = FreeFlowOp.sphere(omega)
    return Reduction(
        kind="sphere",
        dims=op.dims,
        free_flow=op,
        couplings=CouplingSet(1, {(0,): float(kappa)}),
        native_kappa=float(kappa),
        factors={"0": 1.0},
    )


def matrix_reduction(h, kappa: float) -> Reduction:
    op = FreeFlowOp.matrix(h)
    return Reduction(
        kind="matrix",
        dims=op.dims,
        free_flow=op,
        couplings=CouplingSet(2, {(0, 1): 0.5 * kappa}),
        native_kappa=float(kappa),
        factors={"01": 0.5},
    )


def native_rhs(kind: str, state, params: dict) -> np.ndarray:
    """The literal native-coordinate derivative for one model kind."""
    if kind == "kuramoto":
        theta = np.asarray(state, dtype=float)
        nu, kappa = params["nu"], params["kappa"]
        return nu + (kappa / theta.size) * np.sin(theta[None, :] - theta[:, None]).sum(axis=1)
    if kind == "sphere":
        x = np.asarray(state, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"sphere state must be (N, d), got shape {x.shape}")
        omega, kappa = np.asarray(params["omega"], dtype=float), params["kappa"]
        sq = (x * x).sum(axis=1)  # <x_j, x_j>
        mean_dot = x @ x.mean(axis=0)  # (1/N) sum_k <x_k, x_j>
        return x @ omega.T + kappa * (sq[:, None] * x.mean(axis=0) - mean_dot[:, None] * x)
    if kind == "matrix":
        u = np.asarray(state, dtype=np.complex128)
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise ValueError(f"matrix state must be (N, d, d), got shape {u.shape}")
        h, kappa = np.asarray(params["h"], dtype=np.complex128), params["kappa"]
        mean = u.mean(axis=0)
        # (1/N) sum_k U_j U_k^H U_j = U_j mean^H U_j
        drive = np.einsum("ab,nbc->nac", -1j * h, u)
        return drive + 0.5 * kappa * (mean[None] - u @ mean.conj().T @ u)
    raise ValueError(f"unknown model kind {kind!r}")


def native_step(kind: str, state, params: dict, dt: float):
    """One classical fourth-order step of the native model."""
    k1 = native_rhs(kind, state, params)
    k2 = native_rhs(kind, state + 0.5 * dt * k1, params)
    k3 = native_rhs(kind, state + 0.5 * dt * k2, params)
    k4 = native_rhs(kind, state + dt * k3, params)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def embed(kind: str, native) -> EnsembleState:
    """Lift a native state into the tensor ensemble (exact, bit for bit)."""
    if kind == "kuramoto":
        theta = np.asarray(native, dtype=float)
        if theta.ndim != 1:
            raise ValueError(f"kuramoto state must be 1-d, got shape {theta.shape}")
        return EnsembleState((), np.exp(1j * theta)[:, None])
    if kind == "sphere":
        x = np.asarray(native, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"sphere state must be (N, d), got shape {x.shape}")
        norms = np.linalg.norm(x, axis=1)
        if np.abs(norms - 1.0).max() > _UNIT_ATOL:
            raise ValueError("sphere members must be unit vectors")
        return EnsembleState((x.shape[1],), x.astype(np.complex128))
    if kind == "matrix":
        u = np.asarray(native, dtype=np.complex128)
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise ValueError(f"matrix state must be (N, d, d), got shape {u.shape}")
        d = u.shape[1]
        gram_gap = np.linalg.norm(
            u.conj().swapaxes(1, 2) @ u - np.eye(d)[None], axis=(1, 2)
        ).max()
        if gram_gap > _UNIT_ATOL:
            raise ValueError("matrix members must be unitary")
        return EnsembleState.from_tensors(list(u))
    raise ValueError(f"unknown model kind {kind!r}")


def project(kind: str, state: EnsembleState):
    """Inverse of `embed` (round trip is exact)."""
    if kind == "kuramoto":
        if state.dims != ():
            raise ValueError("kuramoto projection needs a rank-0 ensemble")
        mods = np.abs(state.vecs[:, 0])
        if np.abs(mods - 1.0).max() > 1e-6:
            raise ValueError("members are not unit-modulus phases")
        return np.angle(state.vecs[:, 0])
    if kind == "sphere":
        if len(state.dims) != 1:
            raise ValueError("sphere projection needs a rank-1 ensemble")
        arr = np.stack(state.tensors())
        if np.abs(arr.imag).max() > 1e-6:
            raise ValueError("members have non-real components")
        return arr.real.copy()
    if kind == "matrix":
        if len(state.dims) != 2 or state.dims[0] != state.dims[1]:
            raise ValueError("matrix projection needs a square rank-2 ensemble")
        return np.stack(state.tensors())
    raise ValueError(f"unknown model kind {kind!r}")


def _native_distance(kind: str, a, b) -> float:
    if kind == "kuramoto":
        return float(np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b))))).max())
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b), axis=tuple(range(1, np.ndim(a)))).max())


def _make_reduction(kind: str, params: dict) -> Reduction:
    if kind == "kuramoto":
        return kuramoto_reduction(params["nu"], params["kappa"])
    if kind == "sphere":
        return sphere_reduction(params["omega"], params["kappa"])
    if kind == "matrix":
        return matrix_reduction(params["h"], params["kappa"])
    raise ValueError(f"unknown model kind {kind!r}")


def cross_validate(
    kind: str,
    native_init,
    params: dict,
    horizon: float,
    dt: float,
    sample_stride: int = 10,
) -> float:
    """Integrate the native model and its tensor embedding side by side and
    return the largest native-coordinate distance over the sampled times."""
    red = _make_reduction(kind, params)
    tensor_state = embed(kind, native_init)
    sim = SimParams(
        couplings=red.couplings,
        dt=dt,
        horizon=horizon,
        free_flow=red.free_flow,
        sample_stride=None,
        drift_tolerance=1e-3,
    )
    native = np.array(native_init, dtype=float if kind != "matrix" else np.complex128, copy=True)
    worst = 0.0
    n_steps = sim.n_steps
    for k in range(n_steps):
        native = native_step(kind, native, params, dt)
        tensor_state = dynamics.step(tensor_state, sim)
        if (k + 1) % sample_stride == 0 or k + 1 == n_steps:
            worst = max(worst, _native_distance(kind, native, project(kind, tensor_state)))
    return worst
