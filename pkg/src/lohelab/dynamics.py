"""Coupled tensor aggregation dynamics and its fixed-step integrator.

Each member of an ensemble of same-shape complex tensors evolves by a shared
linear free flow plus, per binary coupling word i with strength kappa_i, the
cubic interaction

    kappa_i * ( C(T_c, T_j, T_j, i) - C(T_j, T_c, T_j, i) )

where T_c is the ensemble centroid and C is the cubic contraction of
`lohelab.tensors`.  The right-hand side is evaluated through the matricized
triple-product form (`lohelab.reshape`), batched over members, and the
integrator is classical fourth-order Runge-Kutta with a fixed step: the
flows are smooth and bounded on spheres of constant Frobenius norm, and a
fixed step keeps runs bit-reproducible.

Member norms are first integrals of the exact flow.  By default the
integrator only monitors their drift against the reference norms captured
from the initial data (conservation is a test target, not an enforcement);
`SimParams.renormalize` opts into rescaling after every step for long runs
where classification, not conservation, is the point.

`simulate_batch` advances several same-shape, same-size scenarios in
lockstep through one stacked kernel; `simulate` is the single-scenario
case.  Parameter sweeps and acceptance experiments lean on the batched
form heavily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.optimize

from . import diagnostics, reshape, tensors
from .state import EnsembleState, SimParams
from .tensors import check_dims, unvec

__all__ = [
    "NormDriftError",
    "Trajectory",
    "centroid",
    "rhs",
    "step",
    "simulate",
    "simulate_batch",
    "fundamental_invariant",
    "random_ensemble",
    "clustered_ensemble",
    "bipolar_ensemble",
]


class NormDriftError(RuntimeError):
    """Raised when a member norm drifts beyond tolerance with renormalization off."""

    def __init__(self, time, drift, scenario=0):
        self.time = float(time)
        self.drift = float(drift)
        self.scenario = int(scenario)
        super().__init__(
            f"norm drift {self.drift:.3e} exceeded tolerance at t={self.time:.6g}"
            f" (scenario {self.scenario})"
        )


@dataclass
class Trajectory:
    """Result of one simulated scenario."""

    records: list
    final: EnsembleState
    max_norm_drift: float
    stopped_at: Optional[float] = None


def centroid(state: EnsembleState) -> np.ndarray:
    """Arithmetic mean of the members, as a tensor."""
    return unvec(state.vecs.mean(axis=0), state.dims)


class _BatchKernel:
    """Stacked right-hand side for S same-shape scenarios of N members."""

    def __init__(self, dims, n_members, n_scenarios, params_list):
        size = math.prod(dims) if dims else 1
        self.dims = dims
        self.size = size
        self.n_members = n_members
        self.n_scenarios = n_scenarios
        flows = [p.free_flow for p in params_list]
        if any(f is not None for f in flows):
            mats = np.zeros((n_scenarios, size, size), dtype=np.complex128)
            for s, f in enumerate(flows):
                if f is not None:
                    if f.dims != dims:
                        raise ValueError(f"free flow dims {f.dims} do not match state dims {dims}")
                    mats[s] = f.mat
            self.flow_t = mats.transpose(0, 2, 1).copy()
        else:
            self.flow_t = None
        words = sorted({w for p in params_list for w, _ in p.couplings.active()})
        self.terms = []
        for word in words:
            pl = reshape.plan(dims, word)
            kap = np.array([p.couplings.get(word) for p in params_list], dtype=float)
            self.terms.append((pl, kap.reshape(-1, 1, 1)))

    def rhs(self, v):
        n = self.n_members
        mean = v.mean(axis=1)
        if self.flow_t is not None:
            dv = v @ self.flow_t
        else:
            dv = np.zeros_like(v)
        stacked = np.concatenate((mean[:, None, :], v), axis=1)
        for pl, kap in self.terms:
            grouped = stacked[:, :, pl.gather].reshape(self.n_scenarios, n + 1, pl.cols, pl.rows)
            mats = grouped.swapaxes(2, 3)
            mc = mats[:, :1]
            mj = mats[:, 1:]
            mc_h = mc.conj().swapaxes(2, 3)
            mj_h = mj.conj().swapaxes(2, 3)
            term = mc @ mj_h @ mj - mj @ mc_h @ mj
            flat = term.swapaxes(2, 3).reshape(self.n_scenarios, n, self.size)
            dv += kap * flat[:, :, pl.scatter]
        return dv

    def rk4(self, v, dt):
        half = 0.5 * dt
        k1 = self.rhs(v)
        k2 = self.rhs(v + half * k1)
        k3 = self.rhs(v + half * k2)
        k4 = self.rhs(v + dt * k3)
        return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_state_params(state: EnsembleState, params: SimParams):
    if params.couplings.rank != len(state.dims):
        raise ValueError(
            f"coupling rank {params.couplings.rank} does not match state rank {len(state.dims)}"
        )
    flow = params.free_flow
    if flow is not None and flow.dims != state.dims:
        raise ValueError(f"free flow dims {flow.dims} do not match state dims {state.dims}")


def rhs(state: EnsembleState, params: SimParams, fast: bool = True) -> np.ndarray:
    """Member derivatives, stacked as an (N, *dims) array.

    ``fast=False`` evaluates the couplings through the reference contraction
    instead of the matricized product; the two routes agree to roundoff and
    are cross-checked in CI.
    """
    _check_state_params(state, params)
    if fast:
        kernel = _BatchKernel(state.dims, state.n_members, 1, [params])
        dv = kernel.rhs(state.vecs[None, :, :])[0]
    else:
        mean = centroid(state)
        members = state.tensors()
        rows = []
        for t in members:
            acc = np.zeros(state.dims, dtype=np.complex128)
            if params.free_flow is not None:
                acc += params.free_flow.apply(t)
            for word, kappa in params.couplings.active():
                acc += kappa * (
                    tensors.contract_cubic(mean, t, t, word)
                    - tensors.contract_cubic(t, mean, t, word)
                )
            rows.append(acc.ravel(order="F"))
        dv = np.stack(rows)
    if params.debug:
        radial = np.abs(np.einsum("nd,nd->n", state.vecs.conj(), dv).real).max()
        if radial > 1e-11:
            raise AssertionError(f"radial component of the derivative is {radial:.3e}")
    return np.stack([unvec(dv[j], state.dims) for j in range(state.n_members)])


def step(state: EnsembleState, params: SimParams) -> EnsembleState:
    """Advance one fixed step; monitors or restores member norms."""
    _check_state_params(state, params)
    kernel = _BatchKernel(state.dims, state.n_members, 1, [params])
    v = kernel.rk4(state.vecs[None, :, :], params.dt)[0]
    t_next = state.time + params.dt
    norms = np.sqrt((v.real**2 + v.imag**2).sum(axis=1))
    if params.renormalize:
        v = v * (state.ref_norms / norms)[:, None]
    else:
        drift = float(np.abs(norms - state.ref_norms).max())
        if drift > params.drift_tolerance:
            raise NormDriftError(t_next, drift)
    return state.replace(v, t_next)


def simulate(
    state: EnsembleState,
    params: SimParams,
    observers: Iterable[Callable] = (),
) -> Trajectory:
    """Fixed-step run emitting a diagnostics record every sample stride."""
    return simulate_batch([state], [params], observers=[list(observers)])[0]


def simulate_batch(
    states: list[EnsembleState],
    params_list: list[SimParams],
    observers=None,
    stop_condition: Optional[Callable] = None,
    check_stride: int = 100,
) -> list[Trajectory]:
    """Advance same-shape, same-size scenarios in lockstep.

    All scenarios must share dims, member count, dt, horizon, sample stride
    and the renormalize flag; free flows and couplings may differ.  When
    ``stop_condition(snapshots, t)`` returns True (checked every
    ``check_stride`` steps) the whole batch stops early and the trajectories
    carry ``stopped_at``.  Records are emitted at t=0, every sample stride,
    and at the end; running norm-drift maxima cover every step regardless
    of the stride.
    """
    if len(states) != len(params_list) or not states:
        raise ValueError("need one SimParams per state")
    dims = states[0].dims
    n = states[0].n_members
    ref_dt = params_list[0].dt
    ref_h = params_list[0].horizon
    ref_stride = params_list[0].sample_stride
    ref_renorm = params_list[0].renormalize
    for st, p in zip(states, params_list):
        _check_state_params(st, p)
        if st.dims != dims or st.n_members != n:
            raise ValueError("batched scenarios must share shape and member count")
        if (p.dt, p.horizon, p.sample_stride, p.renormalize) != (ref_dt, ref_h, ref_stride, ref_renorm):
            raise ValueError("batched scenarios must share dt, horizon, stride and renormalize")
    n_scen = len(states)
    if observers is None:
        observers = [() for _ in range(n_scen)]
    kernel = _BatchKernel(dims, n, n_scen, params_list)
    v = np.stack([st.vecs for st in states]).astype(np.complex128)
    refs = np.stack([st.ref_norms for st in states])
    tolerances = np.array([p.drift_tolerance for p in params_list])
    t0 = states[0].time
    if any(st.time != t0 for st in states):
        raise ValueError("batched scenarios must share the starting time")

    drift_max = np.zeros(n_scen)
    records: list[list] = [[] for _ in range(n_scen)]
    stopped_at = None

    def snapshot(s, t):
        return EnsembleState(dims, v[s], time=t, ref_norms=refs[s])

    last_emitted = -1

    def emit(step_index, t):
        nonlocal last_emitted
        for s in range(n_scen):
            rec = diagnostics.record_state(snapshot(s, t), params_list[s].couplings)
            records[s].append(rec)
            for obs in observers[s]:
                obs(rec)
        last_emitted = step_index

    emit(0, t0)
    n_steps = params_list[0].n_steps
    debug = any(p.debug for p in params_list)
    k = 0
    while k < n_steps:
        if debug:
            dv = kernel.rhs(v)
            radial = np.abs(np.einsum("snd,snd->sn", v.conj(), dv).real).max()
            if radial > 1e-11:
                raise AssertionError(f"radial component of the derivative is {radial:.3e}")
        v = kernel.rk4(v, ref_dt)
        k += 1
        t = t0 + k * ref_dt
        norms = np.sqrt((v.real**2 + v.imag**2).sum(axis=2))
        if ref_renorm:
            v *= (refs / norms)[:, :, None]
        else:
            drift = np.abs(norms - refs).max(axis=1)
            np.maximum(drift_max, drift, out=drift_max)
            over = drift > tolerances
            if over.any():
                s = int(np.argmax(over))
                raise NormDriftError(t, drift[s], scenario=s)
        is_last = k == n_steps
        if ref_stride is not None and (k % ref_stride == 0) and not is_last:
            emit(k, t)
        if stop_condition is not None and (k % check_stride == 0) and not is_last:
            snaps = [snapshot(s, t) for s in range(n_scen)]
            if stop_condition(snaps, t):
                stopped_at = t
                break
    t_end = t0 + k * ref_dt
    if last_emitted != k:
        emit(k, t_end)
    return [
        Trajectory(
            records=records[s],
            final=snapshot(s, t_end),
            max_norm_drift=float(drift_max[s]),
            stopped_at=stopped_at,
        )
        for s in range(n_scen)
    ]


def fundamental_invariant(state: EnsembleState, bits) -> np.ndarray:
    """Per-member Gram matrices M^H M of the matricized members.

    For a run with exactly one active coupling these are first integrals;
    with several couplings they may drift and are reported, not asserted.
    The trace always equals the squared member norm (matricization is an
    isometry).
    """
    pl = reshape.plan(state.dims, bits)
    grouped = state.vecs[:, pl.gather].reshape(state.n_members, pl.cols, pl.rows)
    mats = grouped.swapaxes(1, 2)
    return mats.conj().swapaxes(1, 2) @ mats


# --- initial data -----------------------------------------------------------
#
# One 64-bit seed expands through numpy's SeedSequence.spawn, one child per
# member (the clustered generator uses an extra leading child for the
# center), so member tensors are reproducible independent of execution
# order or thread count.


def _spawn_rngs(seed, count):
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def _complex_gaussian(rng, dims):
    return rng.standard_normal(dims) + 1j * rng.standard_normal(dims)


def _normalized(t):
    return t / np.linalg.norm(t)


def random_ensemble(dims, n_members, seed) -> EnsembleState:
    """Members drawn i.i.d. from the uniform distribution on the unit sphere
    (standard complex Gaussian entries, normalized)."""
    dims = check_dims(dims)
    if n_members < 1:
        raise ValueError("need at least one member")
    rngs = _spawn_rngs(seed, n_members)
    return EnsembleState.from_tensors([_normalized(_complex_gaussian(r, dims)) for r in rngs])


def clustered_ensemble(dims, n_members, seed, spread=None, diameter=None) -> EnsembleState:
    """Members normalize(center + spread * G_j) around one random center.

    Exactly one of ``spread`` (the raw perturbation scale) or ``diameter``
    (a target ensemble diameter, solved for deterministically) must be
    given.
    """
    dims = check_dims(dims)
    if n_members < 1:
        raise ValueError("need at least one member")
    if (spread is None) == (diameter is None):
        raise ValueError("give exactly one of spread or diameter")
    rngs = _spawn_rngs(seed, n_members + 1)
    center = _normalized(_complex_gaussian(rngs[0], dims))
    bumps = [_complex_gaussian(r, dims) for r in rngs[1:]]

    def build(eps):
        return [_normalized(center + eps * g) for g in bumps]

    if diameter is not None:
        if diameter < 0:
            raise ValueError("diameter must be >= 0")
        if diameter == 0:
            return EnsembleState.from_tensors([center] * n_members)
        hi = 1.0
        while tensors.ensemble_diameter(build(hi)) < diameter:
            hi *= 2.0
            if hi > 1e6:
                raise ValueError(f"target diameter {diameter} is not reachable")
        spread = scipy.optimize.brentq(
            lambda e: tensors.ensemble_diameter(build(e)) - diameter, 0.0, hi, xtol=1e-14
        )
    return EnsembleState.from_tensors(build(spread))


def bipolar_ensemble(dims, n_members, n_plus, seed) -> EnsembleState:
    """n_plus copies of a random unit tensor and n_members - n_plus of its
    negative: an exact equilibrium of the coupling-only flow."""
    dims = check_dims(dims)
    if not 0 <= n_plus <= n_members:
        raise ValueError("n_plus must lie in [0, n_members]")
    if n_members < 1:
        raise ValueError("need at least one member")
    (rng,) = _spawn_rngs(seed, 1)
    center = _normalized(_complex_gaussian(rng, dims))
    members = [center] * n_plus + [-center] * (n_members - n_plus)
    return EnsembleState.from_tensors(members)
