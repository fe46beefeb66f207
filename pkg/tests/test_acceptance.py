"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  Every tolerance is pinned here; nothing is deferred
to later calibration.
"""

import itertools

import numpy as np
import pytest

from lohelab import diagnostics, dynamics, freeflow, lowrank, reshape, tensors
from lohelab.freeflow import FreeFlowOp
from lohelab.state import CouplingSet, EnsembleState, SimParams

from helpers import random_skew_hermitian, random_tensor, random_unit_tensor, random_unitary


def report(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} ({name}): {detail}"
    print(line)
    assert passed, line


def grid_shapes(max_rank=3, max_dim=3):
    shapes = [()]
    for m in range(1, max_rank + 1):
        shapes += list(itertools.product(range(1, max_dim + 1), repeat=m))
    return shapes


def test_criterion_01_conservation():
    """20 random scenarios, dt=1e-3, horizon 50: norms stay within 1e-8."""
    rng = np.random.default_rng(101)
    dims, n_members, n_scen = (2, 2), 5, 20
    states, ps = [], []
    for s in range(n_scen):
        strengths = {w: rng.uniform(0.0, 2.0) for w in reshape.all_words(2)}
        flow = FreeFlowOp(dims, random_skew_hermitian(rng, 4))
        states.append(dynamics.random_ensemble(dims, n_members, seed=1000 + s))
        ps.append(
            SimParams(
                couplings=CouplingSet(2, strengths), dt=1e-3, horizon=50.0,
                free_flow=flow, renormalize=False, drift_tolerance=1e-6,
                sample_stride=None,
            )
        )
    trajs = dynamics.simulate_batch(states, ps)
    worst = max(t.max_norm_drift for t in trajs)
    report(1, "norm conservation", worst <= 1e-8, f"max drift {worst:.3e} <= 1e-8")


def test_criterion_02_reshaping_equivalence():
    """Exhaustive m<=3, d_k<=3, all words, 100 random triples each."""
    rng = np.random.default_rng(102)
    worst = 0.0
    for dims in grid_shapes():
        for bits in itertools.product((0, 1), repeat=len(dims)):
            for _ in range(100):
                a, b, c = (random_tensor(rng, dims) for _ in range(3))
                gap = np.abs(
                    reshape.cubic_fast(a, b, c, bits) - tensors.contract_cubic(a, b, c, bits)
                ).max()
                worst = max(worst, float(gap))
    report(2, "reshaping equivalence", worst <= 1e-12, f"max |fast - reference| {worst:.3e} <= 1e-12")


def test_criterion_03_isometry():
    """Matricization permutes entries bit-for-bit on the exhaustive grid."""
    rng = np.random.default_rng(103)
    ok = True
    for dims in grid_shapes():
        for bits in itertools.product((0, 1), repeat=len(dims)):
            pl = reshape.plan(dims, bits)
            for _ in range(5):
                t = random_tensor(rng, dims)
                m = reshape.matricize(t, pl)
                same = np.array_equal(np.sort_complex(m.ravel()), np.sort_complex(t.ravel()))
                ok = ok and same
    report(3, "matricization isometry", ok, "entries are a bit-level permutation on the full grid")


def test_criterion_04_monotonic_variance_and_dissipation_identity():
    """V never increases (kappa >= 0) and FD dV/dt matches the dissipation
    formula to 1e-5 at dt=1e-3, improving ~4x when dt halves."""
    cases = [
        ((2, 2), 5, {(0, 0): 1.0, (1, 1): 0.4}),
        ((2, 2), 6, {(0, 1): 0.8, (1, 0): 0.8}),
        ((3,), 4, {(0,): 1.2, (1,): 0.3}),
        ((), 6, {(): 0.7}),
        ((2, 2, 2), 4, {(0, 0, 0): 1.0, (1, 0, 1): 0.2}),
    ]
    worst_increase = -np.inf
    for idx, (dims, n, ks) in enumerate(cases):
        st = dynamics.random_ensemble(dims, n, seed=400 + idx)
        p = SimParams(couplings=CouplingSet(len(dims), ks), dt=1e-3, horizon=1.0, sample_stride=1)
        traj = dynamics.simulate(st, p)
        vs = [r.variance for r in traj.records]
        worst_increase = max(worst_increase, max(b - a for a, b in zip(vs, vs[1:])))
    mono_ok = worst_increase <= 1e-9

    dims, n, ks = cases[0]
    st = dynamics.random_ensemble(dims, n, seed=450)
    cs = CouplingSet(2, ks)
    coarse = dynamics.simulate(st, SimParams(couplings=cs, dt=1e-3, horizon=0.03, sample_stride=1))
    fine = dynamics.simulate(st, SimParams(couplings=cs, dt=5e-4, horizon=0.03, sample_stride=1))
    res_coarse = diagnostics.dissipation_residual(coarse.records[14:17])  # centered at t=0.015
    res_fine = diagnostics.dissipation_residual(fine.records[29:32])
    ratio = res_coarse / res_fine
    ident_ok = res_coarse <= 1e-5 and 3.0 <= ratio <= 5.0
    report(
        4, "variance monotonicity + dissipation identity",
        mono_ok and ident_ok,
        f"max step increase {worst_increase:.3e} <= 1e-9; residual {res_coarse:.3e} <= 1e-5, "
        f"halving dt improves {ratio:.2f}x (~4x)",
    )


def test_criterion_05_lowrank_dissipation_formulas():
    """Generic dissipation equals the rank-0/1/2 closed forms to 1e-12."""
    rng = np.random.default_rng(105)
    worst = 0.0

    for trial in range(5):
        # rank 0: phases
        theta = rng.uniform(-np.pi, np.pi, 6)
        st = EnsembleState((), np.exp(1j * theta)[:, None])
        kappa = rng.uniform(0.2, 2.0)
        total, _ = diagnostics.dissipation(st, CouplingSet(0, {(): kappa}))
        c = np.exp(1j * theta).mean()
        expected = -(kappa / 6) * np.sum(4 * abs(c) ** 2 * np.sin(np.angle(c) - theta) ** 2)
        worst = max(worst, abs(total - expected))

        # rank 1: vectors
        ts = [random_unit_tensor(rng, (3,)) for _ in range(5)]
        st = EnsembleState.from_tensors(ts)
        k0, k1 = rng.uniform(0.2, 2.0, 2)
        total, _ = diagnostics.dissipation(st, CouplingSet(1, {(0,): k0, (1,): k1}))
        mean = sum(ts) / 5
        t0 = sum(
            2 * np.linalg.norm(t) ** 2 * np.linalg.norm(mean) ** 2
            - 2 * (tensors.frobenius_inner(t, mean) ** 2).real
            for t in ts
        )
        t1 = sum(4 * tensors.frobenius_inner(t, mean).imag ** 2 for t in ts)
        worst = max(worst, abs(total - (-(k0 / 5) * t0 - (k1 / 5) * t1)))

        # rank 2: matrices (all four words; the pure words reduce to the
        # vector forms on the flattened matrices)
        ts = [random_unit_tensor(rng, (2, 2)) for _ in range(4)]
        st = EnsembleState.from_tensors(ts)
        k00, k01, k10, k11 = rng.uniform(0.2, 2.0, 4)
        total, _ = diagnostics.dissipation(
            st, CouplingSet(2, {(0, 0): k00, (0, 1): k01, (1, 0): k10, (1, 1): k11})
        )
        mean = sum(ts) / 4
        t00 = sum(
            2 * np.linalg.norm(t) ** 2 * np.linalg.norm(mean) ** 2
            - 2 * (tensors.frobenius_inner(t, mean) ** 2).real
            for t in ts
        )
        t01 = sum(np.linalg.norm(mean @ t.conj().T - t @ mean.conj().T) ** 2 for t in ts)
        t10 = sum(np.linalg.norm(mean.conj().T @ t - t.conj().T @ mean) ** 2 for t in ts)
        t11 = sum(4 * tensors.frobenius_inner(t, mean).imag ** 2 for t in ts)
        expected = -(k00 * t00 + k01 * t01 + k10 * t10 + k11 * t11) / 4
        worst = max(worst, abs(total - expected))

    report(5, "low-rank dissipation formulas", worst <= 1e-12, f"max formula gap {worst:.3e} <= 1e-12")


OMEGA3 = np.array([[0.0, 0.8, -0.2], [-0.8, 0.0, 0.5], [0.2, -0.5, 0.0]])
H2 = np.array([[0.9, 0.25], [0.25, -0.4]])


def test_criterion_06_ssp_families():
    """The three operator families pass the splitting check (residual <=
    1e-10 at the default times) and split integrated trajectories to 1e-6."""
    families = [
        ("kuramoto", FreeFlowOp.kuramoto(0.9), CouplingSet(0, {(): 0.5}), (), 5),
        ("sphere", FreeFlowOp.sphere(OMEGA3), CouplingSet(1, {(0,): 1.0}), (3,), 4),
        ("matrix", FreeFlowOp.matrix(H2), CouplingSet(2, {(0, 1): 0.5}), (2, 2), 4),
    ]
    details = []
    ok = True
    for idx, (name, op, cs, dims, n) in enumerate(families):
        checks = freeflow.ssp_check(op, cs, tol=1e-10)
        check_ok = all(r.passed for r in checks.values())
        worst_res = max(r.max_residual for r in checks.values())
        init = dynamics.random_ensemble(dims, n, seed=600 + idx)
        dev = freeflow.split_verify(op, cs, init, horizon=10.0, dt=1e-3)
        ok = ok and check_ok and dev <= 1e-6
        details.append(f"{name}: residual {worst_res:.1e}, split deviation {dev:.1e}")
    report(6, "solution splitting", ok, "; ".join(details))


def test_criterion_07_reductions():
    """Side-by-side native runs match the embeddings to 1e-6 over horizon 10."""
    rng = np.random.default_rng(107)
    theta = rng.uniform(-np.pi, np.pi, 5)
    dev_k = lowrank.cross_validate("kuramoto", theta, {"nu": 0.7, "kappa": 1.0}, 10.0, 1e-3)
    x = rng.standard_normal((4, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    dev_s = lowrank.cross_validate("sphere", x, {"omega": OMEGA3, "kappa": 1.0}, 10.0, 1e-3)
    u = np.stack([random_unitary(rng, 2) for _ in range(3)])
    dev_m = lowrank.cross_validate("matrix", u, {"h": H2, "kappa": 1.0}, 10.0, 1e-3)
    ok = max(dev_k, dev_s, dev_m) <= 1e-6
    report(
        7, "low-rank reductions", ok,
        f"kuramoto (kappa/2) {dev_k:.1e}, sphere (kappa) {dev_s:.1e}, "
        f"matrix (kappa/2) {dev_m:.1e}, all <= 1e-6",
    )


def test_criterion_08_decay_rate():
    """Tight clusters contract at least at the zero-word coupling rate."""
    st = dynamics.clustered_ensemble((2, 2), 5, seed=801, diameter=0.1)
    slopes = []
    for ks in ({(0, 0): 1.0}, {(0, 0): 1.0, (1, 1): 0.05}):
        p = SimParams(couplings=CouplingSet(2, ks), dt=1e-3, horizon=14.0, sample_stride=50)
        traj = dynamics.simulate(st, p)
        slopes.append(diagnostics.decay_rate_fit(traj.records, t_start=1.0))
    ok = slopes[0] <= -0.9 and slopes[1] <= -0.7
    report(
        8, "diameter decay rate", ok,
        f"slope {slopes[0]:.3f} <= -0.9 (single coupling); "
        f"slope {slopes[1]:.3f} <= -0.7 (with extra word 0.05)",
    )


def _dichotomy_batch(dims, n_members, n_scen, seed0):
    rng = np.random.default_rng(seed0)
    m = len(dims)
    states, ps = [], []
    for s in range(n_scen):
        strengths = {(0,) * m: rng.uniform(0.5, 1.5)}
        for w in reshape.all_words(m):
            if w != (0,) * m and rng.random() < 0.5:
                strengths[w] = rng.uniform(0.0, 0.25)
        states.append(dynamics.random_ensemble(dims, n_members, seed=seed0 * 1000 + s))
        ps.append(
            SimParams(
                couplings=CouplingSet(m, strengths), dt=1e-2, horizon=200.0,
                sample_stride=None, drift_tolerance=1e-5,
            )
        )

    def resolved(snaps, t):
        for sn in snaps:
            pole = diagnostics.classify_poles(sn)
            if pole.verdict == "UNRESOLVED" or pole.residuals.max() > 2e-7 or pole.r_gap > 5e-5:
                return False
        return True

    return dynamics.simulate_batch(states, ps, stop_condition=resolved, check_stride=500)


def test_criterion_09_dichotomy():
    """50 random-init runs in the aggregation regime all resolve to one of
    the two pole configurations by horizon 200."""
    trajs = _dichotomy_batch((2, 2), 5, 25, 901) + _dichotomy_batch((2, 2, 2), 4, 25, 902)
    poles = [diagnostics.classify_poles(t.final) for t in trajs]
    verdicts = {p.verdict for p in poles}
    n_unresolved = sum(p.verdict == "UNRESOLVED" for p in poles)
    worst_residual = max(p.residuals.max() for p in poles)
    worst_gap = max(p.r_gap for p in poles)
    ok = (
        n_unresolved == 0
        and verdicts <= {"COMPLETE", "BIPOLAR"}
        and worst_residual <= 1e-6
        and worst_gap <= 1e-4
    )
    report(
        9, "dichotomy of asymptotic states", ok,
        f"0 unresolved of 50 (verdicts {sorted(verdicts)}), pole residual "
        f"{worst_residual:.1e} <= 1e-6, |R - |sum a|/N| {worst_gap:.1e} <= 1e-4",
    )


def test_criterion_10_sufficient_condition():
    """Initial order parameter above 1 - 2/N forces complete aggregation."""
    groups = [
        (3, (2,), 9), (4, (3,), 9), (5, (2, 2), 8),
        (6, (2, 3), 8), (7, (2, 2, 2), 8), (8, (3, 3), 8),
    ]
    rng = np.random.default_rng(110)
    all_poles = []
    for n, dims, count in groups:
        m = len(dims)
        bound = 1.0 - 2.0 / n
        states, ps = [], []
        for s in range(count):
            seed = 7000 + 100 * n + s
            spread = 0.6
            st = dynamics.clustered_ensemble(dims, n, seed=seed, spread=spread)
            while diagnostics.order_parameter(st) <= bound + 0.02:
                spread *= 0.6
                st = dynamics.clustered_ensemble(dims, n, seed=seed, spread=spread)
            assert diagnostics.order_parameter(st) > bound
            strengths = {(0,) * m: 1.0}
            extra = tuple(rng.integers(0, 2, m))
            if extra != (0,) * m:
                strengths[extra] = rng.uniform(0.0, 0.2)
            states.append(st)
            ps.append(
                SimParams(
                    couplings=CouplingSet(m, strengths), dt=1e-2, horizon=100.0,
                    sample_stride=None, drift_tolerance=1e-5,
                )
            )

        def all_complete(snaps, t):
            for sn in snaps:
                pole = diagnostics.classify_poles(sn)
                if pole.verdict != "COMPLETE" or pole.residuals.max() > 1e-7:
                    return False
            return True

        trajs = dynamics.simulate_batch(states, ps, stop_condition=all_complete, check_stride=500)
        all_poles += [diagnostics.classify_poles(t.final) for t in trajs]
    n_complete = sum(p.verdict == "COMPLETE" for p in all_poles)
    ok = n_complete == 50
    report(
        10, "sufficient condition for complete aggregation", ok,
        f"{n_complete}/50 scenarios classified COMPLETE",
    )


def test_criterion_11_bipolar_equilibria():
    """Exact two-pole states are equilibria with the predicted centroid norm."""
    rng = np.random.default_rng(111)
    worst_rhs, worst_norm = 0.0, 0.0
    for dims, n, n_plus in [((2, 2), 4, 1), ((2, 2), 5, 2), ((3,), 6, 3), ((2, 2, 2), 7, 2)]:
        m = len(dims)
        st = dynamics.bipolar_ensemble(dims, n, n_plus, seed=int(rng.integers(1 << 30)))
        strengths = {w: rng.uniform(0.0, 2.0) for w in reshape.all_words(m)}
        p = SimParams(couplings=CouplingSet(m, strengths), dt=1e-3, horizon=1.0)
        worst_rhs = max(worst_rhs, float(np.abs(dynamics.rhs(st, p)).max()))
        gap = abs(np.linalg.norm(dynamics.centroid(st)) - abs(1 - 2 * n_plus / n))
        worst_norm = max(worst_norm, gap)
    ok = worst_rhs <= 1e-14 and worst_norm <= 1e-14
    report(
        11, "two-pole equilibria", ok,
        f"max |rhs| {worst_rhs:.3e} <= 1e-14, centroid norm gap {worst_norm:.3e} <= 1e-14",
    )


def test_criterion_12_fundamental_invariant():
    """Single-coupling runs conserve the matricized Gram matrices."""
    worst = 0.0
    for bits in reshape.all_words(2):
        st = dynamics.random_ensemble((2, 2), 4, seed=1200 + sum(bits))
        p = SimParams(
            couplings=CouplingSet(2, {bits: 1.0}), dt=1e-3, horizon=20.0, sample_stride=None
        )
        before = dynamics.fundamental_invariant(st, bits)
        traj = dynamics.simulate(st, p)
        after = dynamics.fundamental_invariant(traj.final, bits)
        drift = np.linalg.norm((after - before).reshape(len(before), -1), axis=1).max()
        worst = max(worst, float(drift))
    report(
        12, "single-coupling Gram invariant", worst <= 1e-8,
        f"max Gram drift over horizon 20 {worst:.3e} <= 1e-8",
    )
