"""Shared test utilities: random data and independent pure-loop oracles."""

import itertools

import numpy as np


def random_tensor(rng, dims):
    return rng.standard_normal(dims) + 1j * rng.standard_normal(dims)


def random_unit_tensor(rng, dims):
    t = random_tensor(rng, dims)
    return t / np.linalg.norm(t)


def random_skew_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (x - x.conj().T)


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def contract_loop_oracle(a, b, c, bits):
    """Rank-agnostic pure-loop evaluation of the defining cubic sum."""
    dims = a.shape
    m = len(dims)
    out = np.zeros(dims, complex)
    for free in itertools.product(*[range(d) for d in dims]):
        acc = 0.0
        for summed in itertools.product(*[range(d) for d in dims]):
            ia = tuple(summed[k] if bits[k] else free[k] for k in range(m))
            ic = tuple(free[k] if bits[k] else summed[k] for k in range(m))
            acc += a[ia] * np.conj(b[summed]) * c[ic]
        out[free] = acc
    return out


def ssp_residual_loop_oracle(op, bits, t):
    """Brute-force evaluation of the splitting consistency defect."""
    dims = op.dims
    m = len(dims)
    fwd = op.expm(t)
    bwd = op.expm(-t)
    if m == 0:
        return abs(bwd[0, 0] * fwd[0, 0] * bwd[0, 0] * fwd[0, 0] - 1.0)
    weights = np.cumprod([1] + list(dims))[:m]

    def off(idx):
        return int(sum(i * w for i, w in zip(idx, weights)))

    grid = list(itertools.product(*[range(d) for d in dims]))
    total = 0.0
    for a0 in grid:
        for a1 in grid:
            for g0 in grid:
                for g1 in grid:
                    acc = 0.0
                    for b0 in grid:
                        for b1 in grid:
                            mix_b = tuple(b1[k] if bits[k] else b0[k] for k in range(m))
                            mix_g = tuple(g1[k] if bits[k] else g0[k] for k in range(m))
                            comp_b = tuple(b0[k] if bits[k] else b1[k] for k in range(m))
                            comp_g = tuple(g0[k] if bits[k] else g1[k] for k in range(m))
                            acc += (
                                bwd[off(a0), off(b0)]
                                * fwd[off(mix_b), off(mix_g)]
                                * bwd[off(a1), off(b1)]
                                * fwd[off(comp_b), off(comp_g)]
                            )
                    target = (1.0 if a0 == g0 else 0.0) * (1.0 if g1 == a1 else 0.0)
                    total += abs(acc - target) ** 2
    return float(np.sqrt(total))
