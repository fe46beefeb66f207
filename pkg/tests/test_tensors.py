import itertools

import numpy as np
import pytest

from lohelab import tensors

from helpers import contract_loop_oracle, random_tensor


class TestLinearOffset:
    def test_origin(self):
        assert tensors.linear_offset((0, 0), (2, 3)) == 0

    def test_first_index_fastest(self):
        assert tensors.linear_offset((1, 0), (2, 3)) == 1

    def test_mixed(self):
        # frozen from brute-force enumeration of the 6 offsets of shape (2, 3)
        assert tensors.linear_offset((1, 2), (2, 3)) == 5

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            tensors.linear_offset((2, 0), (2, 3))

    def test_rank_mismatch(self):
        with pytest.raises(ValueError):
            tensors.linear_offset((0, 0, 0), (2, 3))

    @pytest.mark.parametrize(
        "dims",
        [(), (1,), (7,), (2, 3), (3, 2, 2), (1, 5, 1), (16, 16, 16), (4096,), (2,) * 12],
    )
    def test_bijection_exhaustive(self, dims):
        size = tensors.total_size(dims)
        assert size <= 4096
        seen = set()
        for idx in itertools.product(*[range(d) for d in dims]):
            off = tensors.linear_offset(idx, dims)
            assert 0 <= off < size
            assert tensors.offset_to_index(off, dims) == idx
            seen.add(off)
        assert len(seen) == size


class TestFrobenius:
    def test_basis_self(self):
        e0 = np.zeros((2, 2), complex)
        e0[0, 0] = 1.0
        assert tensors.frobenius_inner(e0, e0) == 1.0

    def test_basis_orthogonal(self):
        e0 = np.zeros((2, 2), complex)
        e1 = np.zeros((2, 2), complex)
        e0[0, 0] = 1.0
        e1[1, 0] = 1.0
        assert tensors.frobenius_inner(e0, e1) == 0.0

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(0)
        a = random_tensor(rng, (2, 2, 2))
        b = random_tensor(rng, (2, 2, 2))
        acc = 0.0
        for idx in itertools.product(range(2), range(2), range(2)):
            acc += np.conj(a[idx]) * b[idx]
        assert abs(tensors.frobenius_inner(a, b) - acc) < 1e-14

    def test_conjugate_symmetry_and_positivity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = random_tensor(rng, (3, 2))
            b = random_tensor(rng, (3, 2))
            ab = tensors.frobenius_inner(a, b)
            ba = tensors.frobenius_inner(b, a)
            assert abs(ab - np.conj(ba)) < 1e-13
            aa = tensors.frobenius_inner(a, a)
            assert abs(aa.imag) < 1e-14
            assert aa.real >= 0
            assert abs(aa.real - tensors.frobenius_norm(a) ** 2) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            tensors.frobenius_inner(np.zeros((2,)), np.zeros((3,)))


class TestEnsembleDiameter:
    def test_identical(self):
        t = np.ones((2, 2), complex)
        assert tensors.ensemble_diameter([t, t, t]) == 0.0

    def test_antipodal(self):
        rng = np.random.default_rng(2)
        t = random_tensor(rng, (2, 2))
        t = t / np.linalg.norm(t)
        assert abs(tensors.ensemble_diameter([t, -t]) - 2.0) < 1e-14

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(3)
        ts = [random_tensor(rng, (2, 3)) for _ in range(3)]
        ts = [t / np.linalg.norm(t) for t in ts]
        expected = max(
            np.linalg.norm(ts[i] - ts[j]) for i in range(3) for j in range(i + 1, 3)
        )
        assert tensors.ensemble_diameter(ts) == pytest.approx(expected, abs=0)

    def test_empty(self):
        with pytest.raises(ValueError):
            tensors.ensemble_diameter([])


class TestContractCubic:
    def test_rank1_all_zeros_basis(self):
        e0 = np.zeros(3, complex)
        e0[0] = 1.0
        out = tensors.contract_cubic(e0, e0, e0, (0,))
        assert np.abs(out - e0).max() < 1e-15

    def test_rank1_all_ones_closed_form(self):
        rng = np.random.default_rng(4)
        a, b, c = (random_tensor(rng, (4,)) for _ in range(3))
        out = tensors.contract_cubic(a, b, c, (1,))
        expected = tensors.frobenius_inner(b, a) * c
        assert np.abs(out - expected).max() < 1e-13

    @pytest.mark.parametrize("dims", [(), (3,), (2, 2), (2, 3, 2)])
    def test_degenerate_words(self, dims):
        rng = np.random.default_rng(5)
        a, b, c = (random_tensor(rng, dims) for _ in range(3))
        m = len(dims)
        ones = tensors.contract_cubic(a, b, c, (1,) * m)
        assert np.abs(ones - tensors.frobenius_inner(b, a) * c).max() < 1e-12
        zeros = tensors.contract_cubic(a, b, c, (0,) * m)
        assert np.abs(zeros - a * tensors.frobenius_inner(b, c)).max() < 1e-12

    @pytest.mark.parametrize("dims", [(2, 2), (2, 2, 2), (3, 2)])
    def test_against_loop_oracle(self, dims):
        rng = np.random.default_rng(6)
        for bits in itertools.product((0, 1), repeat=len(dims)):
            a, b, c = (random_tensor(rng, dims) for _ in range(3))
            out = tensors.contract_cubic(a, b, c, bits)
            ref = contract_loop_oracle(a, b, c, bits)
            assert np.abs(out - ref).max() < 1e-13

    def test_word_rank_mismatch(self):
        t = np.zeros((2, 2), complex)
        with pytest.raises(ValueError):
            tensors.contract_cubic(t, t, t, (0,))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            tensors.contract_cubic(np.zeros(2), np.zeros(3), np.zeros(2), (0,))


class TestAsTensor:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            tensors.as_tensor(np.array([np.nan, 1.0]))

    def test_rejects_inf_imag(self):
        with pytest.raises(ValueError):
            tensors.as_tensor(np.array([1j * np.inf, 1.0]))

    def test_vec_unvec_roundtrip(self):
        rng = np.random.default_rng(7)
        t = random_tensor(rng, (2, 3, 2))
        assert np.array_equal(tensors.unvec(tensors.vec(t), (2, 3, 2)), t)
