import numpy as np
import pytest
from scipy.optimize import minimize

from hybridcorr import factorization as fz
from hybridcorr.errors import InvariantViolation, ShapeMismatch
from hybridcorr.generators import edm, edm_correlation, edm_family_blockdiag
from hybridcorr.matrices import DEFAULT_TOL, l1_distance, numerical_rank

FAST = fz.SearchConfig(seed=0, n_starts=6)

DIAG2 = edm_family_blockdiag(((0, 1, 2), (0, 1, 3)))  # 6x6, two rank-3 blocks


def random_psd_stack(rng, n, r):
    A = rng.normal(size=(n, r, r))
    return A @ A.transpose(0, 2, 1)


class TestReconstruct:
    def test_rank_one_factors(self):
        rng = np.random.default_rng(10)
        v = rng.normal(size=(3, 2))
        w = rng.normal(size=(4, 2))
        F = fz.PsdFactorization(
            np.array([np.outer(a, a) for a in v]),
            np.array([np.outer(b, b) for b in w]),
        )
        # oracle: tr(aa^T bb^T) = (a.b)^2
        expected = (v @ w.T) ** 2
        assert np.allclose(fz.reconstruct(F), expected, atol=1e-12)

    def test_scalar_identity(self):
        assert np.allclose(fz.reconstruct(fz.scalar_factorization(0.7)), [[0.7]])

    def test_shape_check(self):
        with pytest.raises(ShapeMismatch):
            fz.PsdFactorization(np.zeros((2, 2, 2)), np.zeros((3, 3, 3)))


class TestEdmClosedForm:
    def test_hand_product(self):
        # points (0,1,2): C_2 = (1,1)(1,1)^T, D_3 = (2,-1)(2,-1)^T, tr = (1-2)^2 = 1
        F = fz.edm_psd_factorization([0, 1, 2])
        assert np.allclose(F.row_factors[1], [[1, 1], [1, 1]])
        assert np.allclose(F.col_factors[2], [[4, -2], [-2, 1]])
        assert np.trace(F.row_factors[1] @ F.col_factors[2]) == pytest.approx(1.0)

    def test_reconstructs_edm(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            c = np.cumsum(rng.uniform(0.3, 2.0, size=rng.integers(2, 7)))
            F = fz.edm_psd_factorization(c)
            assert np.allclose(fz.reconstruct(F), edm(c), atol=1e-10 * max(1, edm(c).max()))

    def test_scale_matches_correlation(self):
        c = [0.0, 1.0, 2.0]
        F = fz.edm_psd_factorization(c, scale=1.0 / 12.0)
        assert np.allclose(fz.reconstruct(F), edm_correlation(c), atol=1e-15)

    def test_factors_are_psd(self):
        fz.edm_psd_factorization([0, 1, 2], scale=0.5).validate()


class TestTensorCompose:
    def test_scalar_identity(self):
        F = fz.edm_psd_factorization([0, 1, 2])
        G = fz.tensor_compose(F, fz.scalar_factorization(1.0))
        assert np.allclose(fz.reconstruct(G), fz.reconstruct(F))

    def test_kron_oracle(self):
        rng = np.random.default_rng(12)
        F1 = fz.PsdFactorization(random_psd_stack(rng, 2, 2), random_psd_stack(rng, 3, 2))
        F2 = fz.PsdFactorization(random_psd_stack(rng, 3, 2), random_psd_stack(rng, 2, 2))
        G = fz.tensor_compose(F1, F2)
        assert G.r == 4
        assert np.allclose(
            fz.reconstruct(G), np.kron(fz.reconstruct(F1), fz.reconstruct(F2)), atol=1e-10
        )

    def test_side_cap(self):
        F = fz.edm_psd_factorization(np.arange(3.0))
        with pytest.raises(Exception):
            fz.tensor_compose(F, F, cap=3)


class TestNmf:
    def test_rank_one_product(self):
        p = np.array([0.2, 0.8])
        q = np.array([0.5, 0.3, 0.2])
        W, H, res = fz.nmf(np.outer(p, q), 1, FAST)
        assert res <= 1e-8
        assert W.min() >= 0 and H.min() >= 0

    def test_diag2_at_full_rank(self):
        W, H, res = fz.nmf(DIAG2, 6, fz.SearchConfig(seed=1, n_starts=10))
        assert res <= 1e-8

    def test_diag2_rank_one_fails(self):
        # independent oracle: best rank-1 nonnegative approx of a correlation
        # with two disjoint mass-1/2 blocks misses at least the smaller block
        W, H, res = fz.nmf(DIAG2, 1, fz.SearchConfig(seed=0, n_starts=10))
        assert res >= 0.4

    def test_deterministic(self):
        W1, H1, r1 = fz.nmf(DIAG2, 3, FAST)
        W2, H2, r2 = fz.nmf(DIAG2, 3, FAST)
        assert r1 == r2 and np.array_equal(W1, W2) and np.array_equal(H1, H2)


class TestPsdFactorize:
    def test_edm_at_r2(self):
        P = edm_correlation([0, 1, 2])
        F, res = fz.psd_factorize(P, 2, FAST)
        assert res <= 1e-8
        F.validate()

    def test_matches_closed_form_quality(self):
        P = edm_correlation([0, 1, 2, 3])
        F, res = fz.psd_factorize(P, 2, FAST)
        closed = l1_distance(fz.reconstruct(fz.edm_psd_factorization([0, 1, 2, 3], 1 / edm([0, 1, 2, 3]).sum())), P)
        assert res <= max(closed, 1e-10) + 1e-8

    def test_r1_cannot_fit_diag2(self):
        # oracle: exhaustive 1x1 case is (a_x b_y), i.e. nonnegative rank 1;
        # direct minimization over the outer-product parametrization
        def loss(t):
            a, b = t[:6] ** 2, t[6:] ** 2
            return np.abs(np.outer(a, b) - DIAG2).sum()

        best = min(
            minimize(loss, np.random.default_rng(s).uniform(0.1, 1, 12), method="Nelder-Mead",
                     options={"maxiter": 4000, "fatol": 1e-12}).fun
            for s in range(5)
        )
        F, res = fz.psd_factorize(DIAG2, 1, FAST)
        assert best >= 0.4
        assert res >= 0.4

    def test_residual_monotone_in_r(self):
        P = edm_correlation([0, 1, 2, 4])
        residuals = [fz.psd_factorize(P, r, FAST)[1] for r in (1, 2, 3)]
        assert residuals[0] >= residuals[1] - 1e-12
        assert residuals[1] >= residuals[2] - 1e-12

    def test_deterministic(self):
        P = edm_correlation([0, 1, 2])
        F1, r1 = fz.psd_factorize(P, 2, FAST)
        F2, r2 = fz.psd_factorize(P, 2, FAST)
        assert r1 == r2
        assert np.array_equal(F1.row_factors, F2.row_factors)

    def test_bad_r(self):
        with pytest.raises(ShapeMismatch):
            fz.psd_factorize(DIAG2, 0)


class TestKblockFactorize:
    def test_two_block_instance(self):
        BF, res = fz.kblock_factorize(DIAG2, 2, 2, fz.SearchConfig(seed=7))
        assert res <= 1e-6
        assert BF.branch_count == 2
        assert BF.weights.sum() == pytest.approx(1.0)
        assert np.allclose(sorted(BF.weights), [0.5, 0.5], atol=1e-6)

    def test_r1_reduces_to_psd(self):
        P = edm_correlation([0, 1, 2])
        BF, res = fz.kblock_factorize(P, 2, 1, FAST)
        assert BF.branch_count == 1
        assert res <= 1e-6

    def test_mixture_law(self):
        BF, _ = fz.kblock_factorize(DIAG2, 2, 2, fz.SearchConfig(seed=7))
        manual = sum(w * fz.reconstruct(b) for w, b in zip(BF.weights, BF.branches))
        assert np.allclose(BF.mixture(), manual, atol=1e-15)

    def test_lower_bound_consistency(self):
        # any accepted (k, r) factorization must satisfy r >= rank / k^2
        BF, res = fz.kblock_factorize(DIAG2, 2, 2, fz.SearchConfig(seed=7))
        assert res <= 1e-6
        assert BF.branch_count >= numerical_rank(DIAG2) / 4

    def test_block_size_enforced(self):
        F = fz.edm_psd_factorization([0, 1, 2], scale=1 / 12)
        with pytest.raises(ShapeMismatch):
            fz.BlockPsdFactorization(block_size=1, weights=[1.0], branches=[F])


class TestCertification:
    def _good(self):
        BF, _ = fz.kblock_factorize(DIAG2, 2, 2, fz.SearchConfig(seed=7))
        return BF

    def test_good_factorization_passes(self):
        cert = fz.certify_block_factorization(DIAG2, self._good())
        assert cert.ok
        assert cert.failures == []
        assert cert.l1_residual <= 1e-6
        assert cert.classical_bits == 1

    def test_negative_weight_fails(self):
        BF = self._good()
        bad = fz.BlockPsdFactorization(
            block_size=2, weights=np.array([1.5, -0.5]), branches=BF.branches
        )
        cert = fz.certify_block_factorization(DIAG2, bad)
        assert not cert.ok
        assert any("WeightInvariant" in f for f in cert.failures)

    def test_non_psd_block_fails_with_index(self):
        BF = self._good()
        rows = BF.branches[1].row_factors.copy()
        rows[0] = np.array([[0.1, 0.5], [0.5, 0.1]])  # indefinite
        bad_branch = fz.PsdFactorization(rows, BF.branches[1].col_factors)
        bad = fz.BlockPsdFactorization(
            block_size=2, weights=BF.weights, branches=(BF.branches[0], bad_branch)
        )
        cert = fz.certify_block_factorization(DIAG2, bad)
        assert not cert.ok
        assert any("branch 1" in f and "not PSD" in f for f in cert.failures)

    def test_wrong_target_fails(self):
        other = edm_family_blockdiag(((0, 1, 3), (0, 1, 2)))
        cert = fz.certify_block_factorization(other, self._good())
        assert not cert.ok
