import numpy as np
import pytest

from hybridcorr import matrices as mx
from hybridcorr.errors import (
    NonNegativityViolation,
    NotSymmetric,
    ShapeMismatch,
    ZeroMatrix,
)

EDM3 = [[0, 1, 4], [1, 0, 1], [4, 1, 0]]


class TestNormalize:
    def test_edm3_divides_by_entry_sum(self):
        # oracle: sum of the 9 entries is 12
        assert sum(sum(r) for r in EDM3) == 12
        P = mx.normalize_to_correlation(EDM3)
        assert np.allclose(P, np.asarray(EDM3) / 12)

    def test_already_normalized(self):
        assert np.allclose(mx.normalize_to_correlation([[1.0]]), [[1.0]])

    def test_uniform_scaling(self):
        assert np.allclose(mx.normalize_to_correlation([[2, 0], [0, 2]]), [[0.5, 0], [0, 0.5]])

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            M = rng.uniform(0, 5, size=rng.integers(1, 6, size=2))
            once = mx.normalize_to_correlation(M)
            assert np.allclose(mx.normalize_to_correlation(once), once, atol=1e-14)

    def test_negative_entry_rejected(self):
        with pytest.raises(NonNegativityViolation):
            mx.normalize_to_correlation([[1, -0.5], [0, 0]])

    def test_zero_matrix_rejected(self):
        with pytest.raises(ZeroMatrix):
            mx.normalize_to_correlation([[0.0, 0.0]])


class TestL1Distance:
    def test_identical(self):
        P = np.asarray(EDM3) / 12
        assert mx.l1_distance(P, P) == 0.0

    def test_disjoint_support(self):
        assert mx.l1_distance([[1, 0], [0, 0]], [[0, 0], [0, 1]]) == 2.0

    def test_direct_sum(self):
        assert mx.l1_distance([[0.5, 0.5]], [[0.4, 0.6]]) == pytest.approx(0.2)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            mx.l1_distance([[1.0]], [[1.0, 0.0]])

    def test_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            A, B, C = (rng.normal(size=(3, 4)) for _ in range(3))
            assert mx.l1_distance(A, C) <= mx.l1_distance(A, B) + mx.l1_distance(B, C) + 1e-12


class TestNumericalRank:
    def test_edm3_full_rank(self):
        # oracle: cofactor expansion gives det = 8
        assert np.linalg.det(np.asarray(EDM3, float)) == pytest.approx(8.0)
        assert mx.numerical_rank(EDM3) == 3

    def test_repeated_row(self):
        assert mx.numerical_rank([[1, 1], [1, 1]]) == 1

    def test_zero(self):
        assert mx.numerical_rank(np.zeros((3, 3))) == 0

    def test_kron_multiplicativity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            A = rng.normal(size=(3, 4))
            B = rng.normal(size=(2, 3))
            # force a rank drop sometimes
            if rng.random() < 0.5:
                A[1] = A[0]
            assert mx.numerical_rank(np.kron(A, B)) == mx.numerical_rank(A) * mx.numerical_rank(B)


class TestIsPsd:
    def test_diagonal_nonnegative(self):
        assert mx.is_psd([[1, 0], [0, 0]])

    def test_indefinite(self):
        # oracle: eigenvalues of [[1,2],[2,1]] are 3 and -1
        w = np.linalg.eigvalsh(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert sorted(w) == pytest.approx([-1.0, 3.0])
        assert not mx.is_psd([[1, 2], [2, 1]])

    def test_zero(self):
        assert mx.is_psd(np.zeros((2, 2)))

    def test_rank_one_projectors(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            v = rng.normal(size=rng.integers(1, 6))
            assert mx.is_psd(np.outer(v, v))

    def test_non_symmetric_rejected(self):
        with pytest.raises(NotSymmetric):
            mx.is_psd([[1, 1], [0, 1]])


class TestWireFormats:
    def test_json_roundtrip(self):
        M = np.asarray(EDM3) / 12
        assert np.array_equal(mx.matrix_from_dict(mx.matrix_to_dict(M)), M)

    def test_csv_roundtrip(self):
        M = np.asarray(EDM3) / 12
        assert np.array_equal(mx.matrix_from_csv(mx.matrix_to_csv(M)), M)

    def test_csv_rejects_nan(self):
        with pytest.raises(ShapeMismatch):
            mx.matrix_from_csv("1.0,nan\n0.0,1.0\n")

    def test_json_rejects_inf(self):
        with pytest.raises(ShapeMismatch):
            mx.matrix_from_dict({"rows": 1, "cols": 2, "entries": [1.0, float("inf")]})

    def test_json_rejects_bad_count(self):
        with pytest.raises(ShapeMismatch):
            mx.matrix_from_dict({"rows": 2, "cols": 2, "entries": [1.0]})
