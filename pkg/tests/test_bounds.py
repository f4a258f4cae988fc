import numpy as np
import pytest

from hybridcorr import bounds as bd
from hybridcorr.factorization import SearchConfig, reconstruct
from hybridcorr.generators import edm_correlation, edm_family_blockdiag, tensor_power
from hybridcorr.matrices import l1_distance

DIAG2 = edm_family_blockdiag(((0, 1, 2), (0, 1, 3)))


class TestClosedForms:
    def test_prank_lb_edm(self):
        # rank 3 -> ceil(sqrt(3)) = 2
        assert bd.prank_lower_bound(edm_correlation([0, 1, 2])) == 2

    def test_prank_lb_rank_one(self):
        assert bd.prank_lower_bound(np.outer([0.5, 0.5], [1.0])) == 1

    def test_prank_lb_zero(self):
        assert bd.prank_lower_bound(np.zeros((2, 2))) == 0

    def test_structured_lb_connected_equals_plain(self):
        P = edm_correlation([0, 1, 2])
        assert bd.structured_prank_lower_bound(P) == bd.prank_lower_bound(P)

    def test_structured_lb_adds_over_blocks(self):
        # two disconnected rank-3 blocks: 2 + 2 > ceil(sqrt(6)) = 3
        assert bd.prank_lower_bound(DIAG2) == 3
        assert bd.structured_prank_lower_bound(DIAG2) == 4

    def test_kprank_lb(self):
        # rank 6, plb 4, k=2: max(ceil(4/2), ceil(6/4)) = 2
        assert bd.kprank_lower_bound(DIAG2, 2, 4) == 2
        assert bd.kprank_lower_bound(DIAG2, 1, 4) == 6
        assert bd.kprank_lower_bound(DIAG2, 10, 4) == 1

    def test_kprank_lb_bad_k(self):
        with pytest.raises(ValueError):
            bd.kprank_lower_bound(DIAG2, 0, 1)

    def test_hybrid_cost(self):
        assert [bd.hybrid_classical_cost(r) for r in (1, 2, 3, 4, 5)] == [0, 1, 2, 2, 3]

    def test_qc_cost(self):
        assert bd.qc_hybrid_cost_upper(4, 1) == 3
        assert bd.qc_hybrid_cost_upper(1, 2) == 3
        assert bd.qc_hybrid_cost_upper(2, 0) == 1

    def test_tradeoff(self):
        P = tensor_power(edm_correlation([0, 1, 2]), 2)  # rank 9 -> need 2s+c >= 4
        assert bd.tradeoff_check(2, 0, P)
        assert bd.tradeoff_check(1, 2, P)
        assert not bd.tradeoff_check(1, 1, P)
        assert not bd.tradeoff_check(0, 3, P)

    def test_t_bounds(self):
        P = tensor_power(edm_correlation([0, 1, 2]), 2)
        # rank 9 (ceil log 4), prank witness 4 (ceil log 2): t in [1, 2]
        assert bd.t_bounds(P, 4) == (1, 2)
        # huge prank estimate floors t_lb at 0
        assert bd.t_bounds(P, 512)[0] == 0

    def test_t_bounds_bad_estimate(self):
        with pytest.raises(ValueError):
            bd.t_bounds(DIAG2, 0)


class TestBoundsReport:
    def test_edm_report(self):
        P = edm_correlation([0, 1, 2])
        rep = bd.bounds_report(P, ks=(2,), search=SearchConfig(seed=0, n_starts=6))
        assert rep.rank == 3
        assert rep.prank_lb == 2
        assert rep.prank_ub == 2  # closed-form family: witness found at the bound
        assert rep.nnr_ub == 3
        assert rep.kprank_lb[2] == 1
        assert rep.kprank_ub[2] == 1
        assert rep.hybrid_bits[2] == 0
        assert rep.t_lb <= rep.t_ub

    def test_witness_backs_upper_bound(self):
        P = edm_correlation([0, 1, 2])
        rep = bd.bounds_report(P, ks=(2,), search=SearchConfig(seed=0, n_starts=6))
        assert rep.prank_witness is not None
        assert l1_distance(reconstruct(rep.prank_witness), P) <= 1e-8
        BF = rep.kprank_witnesses[2]
        assert l1_distance(BF.mixture(), P) <= 1e-8

    def test_diag2_report(self):
        rep = bd.bounds_report(DIAG2, ks=(2,), search=SearchConfig(seed=7, n_starts=8))
        assert rep.rank == 6
        assert rep.prank_lb == 4
        assert rep.kprank_lb[2] == 2
        assert rep.kprank_ub[2] == 2  # witness matches the lower bound
        assert rep.hybrid_bits[2] == 1

    def test_lb_never_exceeds_ub(self):
        rep = bd.bounds_report(DIAG2, ks=(2,), search=SearchConfig(seed=7, n_starts=8))
        if rep.prank_ub is not None:
            assert rep.prank_lb <= rep.prank_ub
        for k, ub in rep.kprank_ub.items():
            assert rep.kprank_lb[k] <= ub

    def test_as_dict_keys_are_strings(self):
        rep = bd.bounds_report(edm_correlation([0, 1, 2]), ks=(2,), search=SearchConfig(seed=0, n_starts=4))
        d = rep.as_dict()
        assert set(d["kprank_lb"]) == {"2"}
        assert isinstance(d["rank"], int)
