"""Closed-form rank bounds, cost formulas, and the aggregated bounds report.

All logarithms are base 2.  Upper bounds are only reported when backed by an
explicit factorization witness at tolerance; lower bounds come from ordinary
rank via prank >= sqrt(rank) and the block inequalities
kprank >= prank / k and kprank >= rank / k^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .factorization import (
    BlockPsdFactorization,
    PsdFactorization,
    SearchConfig,
    _support_components,
    kblock_factorize,
    nmf,
    psd_factorize,
)
from .matrices import DEFAULT_TOL, ToleranceConfig, as_matrix, numerical_rank

__all__ = [
    "prank_lower_bound",
    "structured_prank_lower_bound",
    "kprank_lower_bound",
    "hybrid_classical_cost",
    "qc_hybrid_cost_upper",
    "tradeoff_check",
    "t_bounds",
    "BoundsReport",
    "bounds_report",
]


def _ceil_log2(r: int) -> int:
    return int(math.ceil(math.log2(r))) if r > 1 else 0


def prank_lower_bound(P, cfg: ToleranceConfig = DEFAULT_TOL) -> int:
    """ceil(sqrt(rank(P))), from prank(A) >= sqrt(rank(A))."""
    rank = numerical_rank(as_matrix(P), cfg)
    return int(math.ceil(math.sqrt(rank))) if rank > 0 else 0


def structured_prank_lower_bound(P, cfg: ToleranceConfig = DEFAULT_TOL) -> int:
    """Sum of ceil(sqrt(rank)) over support-connected components.

    Branches of a PSD factorization cannot couple disconnected support
    blocks without inflating the side length, so the sqrt-rank bound adds up
    across blocks; on connected support this reduces to prank_lower_bound.
    """
    P = as_matrix(P)
    comps = _support_components(P, cfg)
    if len(comps) <= 1:
        return prank_lower_bound(P, cfg)
    total = 0
    for ridx, cidx in comps:
        total += prank_lower_bound(P[np.ix_(ridx, cidx)], cfg)
    return max(total, 1)


def kprank_lower_bound(P, k: int, prank_lb: int, cfg: ToleranceConfig = DEFAULT_TOL) -> int:
    """max(ceil(prank_lb / k), ceil(rank / k^2), 1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rank = numerical_rank(as_matrix(P), cfg)
    return max(math.ceil(prank_lb / k), math.ceil(rank / (k * k)), 1)


def hybrid_classical_cost(r: int) -> int:
    """Classical bits of a classical-quantum hybrid with r branches: ceil(log2 r)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return _ceil_log2(r)


def qc_hybrid_cost_upper(r: int, s: int) -> int:
    """Classical bits of a quantum-classical hybrid: ceil(log2 r) + 2^s - 1."""
    if r < 1 or s < 0:
        raise ValueError("need r >= 1 and s >= 0")
    return _ceil_log2(r) + 2**s - 1


def tradeoff_check(s: int, c: int, P, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Stage-cost tradeoff: 2s + c >= ceil(log2 rank(P))."""
    if s < 0 or c < 0:
        raise ValueError("s and c must be >= 0")
    rank = numerical_rank(as_matrix(P), cfg)
    return 2 * s + c >= _ceil_log2(max(rank, 1))


def t_bounds(P, prank_estimate: int, cfg: ToleranceConfig = DEFAULT_TOL) -> tuple[int, int]:
    """Bounds on the stage-two quantum communication t.

    t_ub = ceil(log2 prank_estimate); t_lb = half the gap between
    ceil(log2 rank) and t_ub, floored at 0.
    """
    if prank_estimate < 1:
        raise ValueError("prank_estimate must be >= 1")
    rank = numerical_rank(as_matrix(P), cfg)
    t_ub = _ceil_log2(prank_estimate)
    t_lb = max(0, math.ceil((_ceil_log2(max(rank, 1)) - t_ub) / 2))
    return t_lb, t_ub


@dataclass
class BoundsReport:
    """Certified bounds for one correlation; every upper bound carries a witness."""

    rank: int
    prank_lb: int
    prank_ub: int | None = None
    nnr_ub: int | None = None
    kprank_lb: dict = field(default_factory=dict)
    kprank_ub: dict = field(default_factory=dict)
    hybrid_bits: dict = field(default_factory=dict)
    t_lb: int = 0
    t_ub: int = 0
    eps_witnessed: bool = False
    prank_witness: PsdFactorization | None = None
    kprank_witnesses: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "prank_lb": self.prank_lb,
            "prank_ub": self.prank_ub,
            "nnr_ub": self.nnr_ub,
            "kprank_lb": {str(k): v for k, v in sorted(self.kprank_lb.items())},
            "kprank_ub": {str(k): v for k, v in sorted(self.kprank_ub.items())},
            "hybrid_bits": {str(k): v for k, v in sorted(self.hybrid_bits.items())},
            "t_lb": self.t_lb,
            "t_ub": self.t_ub,
            "eps_witnessed": self.eps_witnessed,
            "note": "upper bounds are real-PSD witnesses; lower bounds are rank-based",
        }


def bounds_report(
    P,
    ks=(2,),
    search: SearchConfig = SearchConfig(),
    tol: ToleranceConfig = DEFAULT_TOL,
    max_extra_r: int = 3,
) -> BoundsReport:
    """Run every bound and witness search for P and assemble the report.

    For each requested k the k-block upper bound is a feasibility search over
    the branch count r, starting at the lower bound; the plain PSD upper
    bound searches sides prank_lb .. prank_lb + max_extra_r.  An upper bound
    is recorded only when the witness residual meets the tolerance (or the
    eps budget when approximate mode is on).
    """
    P = as_matrix(P)
    rank = numerical_rank(P, tol)
    plb = structured_prank_lower_bound(P, tol)
    accept = max(tol.residual_tol, search.eps)
    report = BoundsReport(rank=rank, prank_lb=plb, eps_witnessed=search.eps > 0)

    for r in range(max(plb, 1), max(plb, 1) + max_extra_r + 1):
        F, res = psd_factorize(P, r, search, tol)
        if res <= accept:
            report.prank_ub = r
            report.prank_witness = F
            break

    for r in range(max(rank, 1), max(rank, 1) + max_extra_r + 1):
        W, H, res = nmf(P, r, search, tol)
        if res <= accept:
            report.nnr_ub = r
            break

    for k in ks:
        lb = kprank_lower_bound(P, k, plb, tol)
        report.kprank_lb[k] = lb
        for r in range(lb, lb + max_extra_r + 1):
            BF, res = kblock_factorize(P, k, r, search, tol)
            if res <= accept:
                report.kprank_ub[k] = BF.branch_count
                report.kprank_witnesses[k] = BF
                report.hybrid_bits[k] = hybrid_classical_cost(BF.branch_count)
                break

    prank_est = report.prank_ub if report.prank_ub is not None else max(plb, 1)
    report.t_lb, report.t_ub = t_bounds(P, prank_est, tol)
    return report
