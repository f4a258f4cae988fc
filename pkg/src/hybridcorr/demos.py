"""Self-checking demonstration pipelines for the three worked scenarios.

Each demo runs the full pipeline at fixed seeds, asserts its invariants
inline, and returns a machine-readable report with one named check per
claim.
"""

from __future__ import annotations

import numpy as np

from .bounds import (
    hybrid_classical_cost,
    kprank_lower_bound,
    qc_hybrid_cost_upper,
    structured_prank_lower_bound,
    t_bounds,
    tradeoff_check,
)
from .errors import UnknownDemo
from .factorization import (
    SearchConfig,
    certify_block_factorization,
    edm_psd_factorization,
    kblock_factorize,
    reconstruct,
    tensor_compose,
)
from .generators import edm_correlation, edm_family_blockdiag, tensor_power
from .matrices import DEFAULT_TOL, ToleranceConfig, l1_distance, numerical_rank
from .protocols import (
    build_cq_hybrid,
    build_qc_hybrid,
    hybrid_exact_distribution,
    make_ledger,
)

__all__ = ["DEMO_NAMES", "run_demo", "diag_family_instance", "q2_instance"]

DEMO_NAMES = ("eq2-diag", "q2-tensor", "tradeoff")

# four rank-3 EDM correlations, one per diagonal block
_DIAG_POINT_SETS = ((0.0, 1.0, 2.0), (0.0, 1.0, 3.0), (0.0, 2.0, 3.0), (1.0, 2.0, 3.0))


def diag_family_instance() -> np.ndarray:
    """Uniform block-diagonal mixture of 4 EDM correlations (12x12, s=1, k0=2)."""
    return edm_family_blockdiag(_DIAG_POINT_SETS)


def q2_instance(n: int = 4) -> np.ndarray:
    """Q2 = Q1 (x) Q1 for the normalized EDM over points 0..n-1."""
    return tensor_power(edm_correlation(tuple(float(i) for i in range(n))), 2)


def run_demo(name: str, seed: int = 7, tol: ToleranceConfig = DEFAULT_TOL) -> dict:
    if name == "eq2-diag":
        return _demo_eq2_diag(seed, tol)
    if name == "q2-tensor":
        return _demo_q2_tensor(seed, tol)
    if name == "tradeoff":
        return _demo_tradeoff(seed, tol)
    raise UnknownDemo(f"unknown demo {name!r}; known: {', '.join(DEMO_NAMES)}")


def _finish(name, seed, tol, results, checks):
    return {
        "demo": name,
        "seed": seed,
        "tolerances": tol.as_dict(),
        "results": results,
        "checks": [{"name": n, "passed": bool(ok)} for n, ok in checks],
        "all_passed": all(ok for _, ok in checks),
    }


def _demo_eq2_diag(seed, tol):
    """Diagonal family: 4 blocks of PSD rank 2, capability s=1.

    The hybrid needs exactly 2 classical bits; the quantum-classical variant
    needs 2 + (2^1 - 1) = 3 bits; the block lower bound is tight against the
    4-branch witness.
    """
    s, k = 1, 2
    P = diag_family_instance()
    search = SearchConfig(seed=seed)
    plb = structured_prank_lower_bound(P, tol)
    klb = kprank_lower_bound(P, k, plb, tol)
    BF, residual = kblock_factorize(P, k, 4, search, tol)
    cert = certify_block_factorization(P, BF, tol)
    cq = build_cq_hybrid(BF, s, tol)
    cq_ledger = make_ledger(cq, target=P, tol=tol)
    qc, qc_ledger = build_qc_hybrid(BF, s, target=P, tol=tol)
    mix_gap = l1_distance(hybrid_exact_distribution(cq), hybrid_exact_distribution(qc))
    checks = [
        ("rank_is_12", numerical_rank(P, tol) == 12),
        ("prank_lb_is_8", plb == 8),
        ("kprank_lb_is_4", klb == 4),
        ("witness_residual", residual <= 1e-6),
        ("witness_matches_lb", BF.branch_count == klb),
        ("certification", cert.ok),
        ("hybrid_bits_2", hybrid_classical_cost(BF.branch_count) == 2),
        ("qc_bits_3", qc_hybrid_cost_upper(BF.branch_count, s) == 3),
        ("cq_qc_same_mixture", mix_gap <= 1e-9),
        ("lemma6", tradeoff_check(s, cq.classical_bits, P, tol)),
        ("cq_ledger", cq_ledger.all_passed()),
        ("qc_ledger", qc_ledger.all_passed()),
    ]
    results = {
        "shape": list(P.shape),
        "rank": numerical_rank(P, tol),
        "prank_lb": plb,
        "kprank_lb": {str(k): klb},
        "kblock_residual": residual,
        "branch_count": BF.branch_count,
        "hybrid_bits": hybrid_classical_cost(BF.branch_count),
        "qc_bits": qc_hybrid_cost_upper(BF.branch_count, s),
        "cq_ledger": cq_ledger.as_dict(),
        "qc_ledger": qc_ledger.as_dict(),
    }
    return _finish("eq2-diag", seed, tol, results, checks)


def _demo_q2_tensor(seed, tol):
    """Q2 over n=4 points: one-branch block search at k=2 must fail.

    rank(Q2) = 9 gives prank >= 3, so no single 2x2-block branch can carry
    Q2; the block lower bound at k=2 is 3 >= log2(4).
    """
    n, k = 4, 2
    P = q2_instance(n)
    search = SearchConfig(seed=seed)
    rank = numerical_rank(P, tol)
    plb = structured_prank_lower_bound(P, tol)
    klb = kprank_lower_bound(P, k, plb, tol)
    BF, residual = kblock_factorize(P, k, 1, search, tol)
    checks = [
        ("rank_is_9", rank == 9),
        ("prank_lb_is_3", plb == 3),
        ("kprank_lb_is_3", klb == 3),
        ("kprank_lb_at_least_log2_n", klb >= int(np.ceil(np.log2(n)))),
        ("single_branch_infeasible", residual > 1e-2),
    ]
    results = {
        "shape": list(P.shape),
        "rank": rank,
        "prank_lb": plb,
        "kprank_lb": {str(k): klb},
        "single_branch_residual": residual,
    }
    return _finish("q2-tensor", seed, tol, results, checks)


def _demo_tradeoff(seed, tol):
    """Stage-cost ledger on Q2 over 3 points: rank 9, PSD witness of side 4."""
    P = q2_instance(3)
    F1 = edm_psd_factorization((0.0, 1.0, 2.0), scale=1.0)
    F = tensor_compose(F1, F1)
    # rescale the witness to the normalized correlation
    rows = F.row_factors / reconstruct(F).sum()
    Fn = type(F)(rows, F.col_factors)
    witness_gap = l1_distance(reconstruct(Fn), P)
    rank = numerical_rank(P, tol)
    t_lb, t_ub = t_bounds(P, 4, tol)
    checks = [
        ("rank_is_9", rank == 9),
        ("witness_reconstructs", witness_gap <= 1e-9),
        ("t_lb_is_1", t_lb == 1),
        ("t_ub_is_2", t_ub == 2),
        ("lemma6_at_c2_s1", tradeoff_check(1, 2, P, tol)),
    ]
    results = {
        "shape": list(P.shape),
        "rank": rank,
        "prank_witness_side": 4,
        "witness_l1_gap": witness_gap,
        "t_lb": t_lb,
        "t_ub": t_ub,
    }
    return _finish("tradeoff", seed, tol, results, checks)
