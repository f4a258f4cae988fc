import numpy as np
import pytest

from hybridcorr import generators as gen
from hybridcorr.errors import DuplicatePoints, ShapeMismatch, SizeCapExceeded, WeightMismatch
from hybridcorr.matrices import is_correlation, numerical_rank


class TestEdm:
    def test_three_points(self):
        assert np.array_equal(gen.edm([0, 1, 2]), [[0, 1, 4], [1, 0, 1], [4, 1, 0]])

    def test_two_points(self):
        assert np.array_equal(gen.edm([0, 3]), [[0, 9], [9, 0]])

    def test_correlation_normalizes(self):
        Q = gen.edm_correlation([0, 1, 2])
        assert is_correlation(Q)
        assert Q[0, 2] == pytest.approx(4 / 12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            c = np.cumsum(rng.uniform(0.1, 2.0, size=5))  # distinct by construction
            t = rng.normal()
            assert np.allclose(gen.edm(c + t), gen.edm(c), atol=1e-9)

    def test_reflection_invariance(self):
        c = np.array([0.0, 1.5, 4.0])
        assert np.allclose(gen.edm(-c), gen.edm(c))

    def test_rank_three_generically(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            c = np.cumsum(rng.uniform(0.5, 2.0, size=rng.integers(3, 7)))
            assert numerical_rank(gen.edm(c)) == 3

    def test_duplicate_points_rejected(self):
        with pytest.raises(DuplicatePoints):
            gen.edm([0, 1, 1])

    def test_single_point_rejected(self):
        with pytest.raises(DuplicatePoints):
            gen.edm([2.0])


class TestTensorPower:
    def test_power_one_identity(self):
        Q = gen.edm_correlation([0, 1, 2])
        assert np.array_equal(gen.tensor_power(Q, 1), Q)

    def test_square_entries(self):
        Q = gen.edm_correlation([0, 1, 2])
        T = gen.tensor_power(Q, 2)
        assert T.shape == (9, 9)
        # oracle: entry ((i1,i2),(j1,j2)) = Q[i1,j1] * Q[i2,j2]
        rng = np.random.default_rng(6)
        for _ in range(30):
            i1, i2, j1, j2 = rng.integers(0, 3, size=4)
            assert T[3 * i1 + i2, 3 * j1 + j2] == pytest.approx(Q[i1, j1] * Q[i2, j2])

    def test_stays_correlation(self):
        Q = gen.edm_correlation([0, 1, 3])
        assert is_correlation(gen.tensor_power(Q, 3))

    def test_associativity(self):
        Q = gen.edm_correlation([0, 2, 5])
        assert np.allclose(gen.tensor_power(Q, 3), np.kron(gen.tensor_power(Q, 2), Q), atol=1e-15)

    def test_rank_multiplies(self):
        Q = gen.edm_correlation([0, 1, 2, 3])
        assert numerical_rank(gen.tensor_power(Q, 2)) == 9

    def test_cap(self):
        Q = gen.edm_correlation(list(range(9)))
        with pytest.raises(SizeCapExceeded):
            gen.tensor_power(Q, 4)

    def test_non_correlation_rejected(self):
        with pytest.raises(Exception):
            gen.tensor_power([[1.0, 1.0]], 2)


class TestBlockDiagonalMix:
    def test_two_blocks(self):
        A = np.array([[1.0]])
        B = np.array([[0.5, 0.5]])
        M = gen.block_diagonal_mix([A, B], [0.25, 0.75])
        assert np.allclose(M, [[0.25, 0, 0], [0, 0.375, 0.375]])
        assert is_correlation(M)

    def test_rank_adds(self):
        parts = [gen.edm_correlation([0, 1, 2]), gen.edm_correlation([0, 1, 3])]
        M = gen.block_diagonal_mix(parts, [0.5, 0.5])
        assert numerical_rank(M) == 6

    def test_offdiagonal_zero(self):
        parts = [gen.edm_correlation([0, 1, 2]), gen.edm_correlation([0, 1, 3])]
        M = gen.block_diagonal_mix(parts, [0.5, 0.5])
        assert np.all(M[:3, 3:] == 0) and np.all(M[3:, :3] == 0)

    def test_weight_count_mismatch(self):
        with pytest.raises(WeightMismatch):
            gen.block_diagonal_mix([np.array([[1.0]])], [0.5, 0.5])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(WeightMismatch):
            gen.block_diagonal_mix([np.array([[1.0]]), np.array([[1.0]])], [0.5, 0.6])

    def test_edm_family_uniform(self):
        M = gen.edm_family_blockdiag(((0, 1, 2), (0, 1, 3)))
        assert M.shape == (6, 6)
        assert M[:3, :3].sum() == pytest.approx(0.5)
        assert M[3:, 3:].sum() == pytest.approx(0.5)


class TestInnerProductSquared:
    def test_n1(self):
        # strings 0,1; <a,b> mod 2 is 0 except for a=b=1
        assert np.array_equal(gen.inner_product_squared_matrix(1), [[1, 1], [1, 0]])

    def test_n2_row_zero_all_ones(self):
        M = gen.inner_product_squared_matrix(2)
        assert np.all(M[0] == 1) and np.all(M[:, 0] == 1)

    def test_symmetric_binary(self):
        M = gen.inner_product_squared_matrix(3)
        assert np.array_equal(M, M.T)
        assert set(np.unique(M)) == {0, 1}

    def test_n2_hand_entry(self):
        # a=01, b=11: inner product 0*1+1*1 = 1 mod 2 -> entry 0
        M = gen.inner_product_squared_matrix(2)
        assert M[1, 3] == 0

    def test_cap(self):
        with pytest.raises(SizeCapExceeded):
            gen.inner_product_squared_matrix(11)

    def test_n_zero_rejected(self):
        with pytest.raises(ShapeMismatch):
            gen.inner_product_squared_matrix(0)
