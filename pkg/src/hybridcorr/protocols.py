"""Runnable two-party sampling protocols built from factorizations.

A PSD factorization of a correlation turns into a shared pure seed state
plus one local POVM per party, reproducing the correlation through the Born
rule.  A block factorization turns into a hybrid protocol: sample a branch
classically, then run that branch's seed protocol.  The quantum-classical
variant fixes the shared state to s EPR pairs up front and converts it to
the branch state by LOCC, which Nielsen's majorization criterion always
permits from the maximally entangled state; the conversion is simulated at
state level and charged the worst-case 2^s - 1 classical bits.

Sampling uses numpy's counter-based Philox generator; one stream per run,
branch index drawn before the outcome on every draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import hybrid_classical_cost, qc_hybrid_cost_upper, t_bounds, tradeoff_check
from .errors import (
    CapabilityExceeded,
    DimensionMismatch,
    MajorizationFailure,
    ShapeMismatch,
    SingularSupport,
)
from .factorization import BlockPsdFactorization, PsdFactorization, reconstruct
from .matrices import DEFAULT_TOL, ToleranceConfig, as_matrix, l1_distance, numerical_rank

__all__ = [
    "QuantumSeedProtocol",
    "HybridProtocol",
    "ResourceLedger",
    "build_seed_protocol",
    "exact_distribution",
    "sample",
    "build_cq_hybrid",
    "build_qc_hybrid",
    "hybrid_exact_distribution",
    "simulate_hybrid",
    "schmidt_vector",
    "majorized_by",
    "epr_schmidt_vector",
]

_SUPPORT_CUTOFF = 1e-10


@dataclass(frozen=True)
class QuantumSeedProtocol:
    """Shared bipartite pure state (each side dimension r) plus local POVMs."""

    state: np.ndarray  # (r*r,) unit vector
    alice_povm: np.ndarray  # (n, r, r)
    bob_povm: np.ndarray  # (m, r, r)

    def __post_init__(self):
        state = np.asarray(self.state, float).ravel()
        E = np.asarray(self.alice_povm, float)
        F = np.asarray(self.bob_povm, float)
        r = E.shape[1]
        if E.ndim != 3 or F.ndim != 3 or E.shape[1:] != (r, r) or F.shape[1:] != (r, r):
            raise ShapeMismatch("POVM stacks must be (n,r,r) and (m,r,r)")
        if state.size != r * r:
            raise DimensionMismatch(f"state has {state.size} amplitudes, expected {r * r}")
        if abs(np.linalg.norm(state) - 1.0) > 1e-9:
            raise ShapeMismatch("seed state must be a unit vector")
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "alice_povm", E)
        object.__setattr__(self, "bob_povm", F)

    @property
    def r(self) -> int:
        return self.alice_povm.shape[1]

    @property
    def seed_qubits(self) -> int:
        return int(math.ceil(math.log2(self.r))) if self.r > 1 else 0


@dataclass(frozen=True)
class HybridProtocol:
    """Branch weights plus one seed protocol per branch, under capability s."""

    weights: np.ndarray
    branches: tuple
    s: int

    def __post_init__(self):
        w = np.asarray(self.weights, float).ravel()
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "branches", tuple(self.branches))
        if w.size != len(self.branches) or w.size == 0:
            raise ShapeMismatch("one weight per branch required")
        for b in self.branches:
            if b.seed_qubits > self.s:
                raise CapabilityExceeded(f"branch needs {b.seed_qubits} qubits, capability is {self.s}")

    @property
    def classical_bits(self) -> int:
        return hybrid_classical_cost(len(self.branches))


@dataclass
class ResourceLedger:
    """Per-protocol accounting of qubits and classical bits plus bound checks."""

    qubits_used: int
    classical_bits_stage1: int
    classical_bits_locc: int = 0
    bound_checks: list = field(default_factory=list)

    @property
    def total_classical_bits(self) -> int:
        return self.classical_bits_stage1 + self.classical_bits_locc

    def all_passed(self) -> bool:
        return all(ok for _, ok in self.bound_checks)

    def as_dict(self) -> dict:
        return {
            "qubits_used": self.qubits_used,
            "classical_bits_stage1": self.classical_bits_stage1,
            "classical_bits_locc": self.classical_bits_locc,
            "total_classical_bits": self.total_classical_bits,
            "bound_checks": [{"name": n, "passed": ok} for n, ok in self.bound_checks],
        }


def _psd_power(M: np.ndarray, power: float) -> tuple[np.ndarray, np.ndarray]:
    """M^power on the support of M (eigenvalues below cutoff dropped).

    Returns (M^power, support projector).
    """
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    cutoff = _SUPPORT_CUTOFF * max(float(w.max()), 1.0)
    keep = w > cutoff
    if not keep.any():
        raise SingularSupport("matrix has empty support at tolerance")
    wk = np.where(keep, np.clip(w, cutoff, None) ** power, 0.0)
    Vk = V
    return (Vk * wk[None, :]) @ Vk.T, (Vk * keep[None, :].astype(float)) @ Vk.T


def build_seed_protocol(F: PsdFactorization, tol: ToleranceConfig = DEFAULT_TOL) -> QuantumSeedProtocol:
    """Turn a correlation's PSD factorization into a seed state and POVMs.

    With G = sum_y D_y:  D'_y = G^-1/2 D_y G^-1/2 (a POVM on supp G),
    C'_x = G^1/2 C_x G^1/2, S = sum_x C'_x (unit trace when F reconstructs a
    correlation), seed state = (S^1/2 (x) I) sum_i e_i (x) e_i, and
    E_x = S^-1/2 C'_x S^-1/2.  Born-rule evaluation then returns tr(C_x D_y).
    """
    C, D = F.row_factors, F.col_factors
    r = F.r
    G = D.sum(axis=0)
    G_half, _ = _psd_power(G, 0.5)
    G_neg_half, G_proj = _psd_power(G, -0.5)
    D_prime = G_neg_half @ D @ G_neg_half
    C_prime = G_half @ C @ G_half
    S = C_prime.sum(axis=0)
    S_half, _ = _psd_power(S, 0.5)
    S_neg_half, S_proj = _psd_power(S, -0.5)
    E = S_neg_half @ C_prime @ S_neg_half
    state = (S_half @ np.eye(r)).ravel()
    norm = np.linalg.norm(state)
    if norm <= 0:
        raise SingularSupport("seed state has zero norm")
    state = state / norm
    proto = QuantumSeedProtocol(state=state, alice_povm=E, bob_povm=D_prime)
    _check_completeness(proto, S_proj, G_proj)
    return proto


def _check_completeness(proto: QuantumSeedProtocol, alice_proj, bob_proj, atol: float = 1e-9) -> None:
    if np.abs(proto.alice_povm.sum(axis=0) - alice_proj).max() > atol:
        raise SingularSupport("Alice POVM does not sum to the support projector")
    if np.abs(proto.bob_povm.sum(axis=0) - bob_proj).max() > atol:
        raise SingularSupport("Bob POVM does not sum to the support projector")


def exact_distribution(proto: QuantumSeedProtocol) -> np.ndarray:
    """Born rule: entry (x,y) = <state| E_x (x) F_y |state>, clipped at 0."""
    r = proto.r
    psi = proto.state.reshape(r, r)
    T = np.einsum("ij,xik,kl->xjl", psi, proto.alice_povm, psi)  # psi^T E_x psi
    out = np.einsum("xjl,ylj->xy", T, proto.bob_povm)
    return np.clip(out, 0.0, None)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def sample(proto: QuantumSeedProtocol, rng_seed: int, N: int) -> np.ndarray:
    """Draw N i.i.d. (x,y) pairs by inverse CDF over the flattened distribution."""
    if N < 1:
        raise ShapeMismatch("N must be >= 1")
    dist = exact_distribution(proto)
    return _inverse_cdf_pairs(dist, _rng(rng_seed).random(N))


def _inverse_cdf_pairs(dist: np.ndarray, u: np.ndarray) -> np.ndarray:
    flat = dist.ravel()
    cdf = np.cumsum(flat / flat.sum())
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, flat.size - 1)
    x, y = np.unravel_index(idx, dist.shape)
    return np.column_stack([x, y])


def build_cq_hybrid(BF: BlockPsdFactorization, s: int, tol: ToleranceConfig = DEFAULT_TOL) -> HybridProtocol:
    """Classical-quantum hybrid: one seed protocol per branch, branch drawn classically."""
    if BF.block_size > 2**s:
        raise CapabilityExceeded(f"block size {BF.block_size} exceeds 2^{s}")
    branches = tuple(build_seed_protocol(b, tol) for b in BF.branches)
    return HybridProtocol(weights=BF.weights, branches=branches, s=s)


def hybrid_exact_distribution(H: HybridProtocol) -> np.ndarray:
    return sum(w * exact_distribution(b) for w, b in zip(H.weights, H.branches))


def schmidt_vector(state, dims: tuple[int, int]) -> np.ndarray:
    """Squared singular values of the dA x dB reshaping, sorted non-increasing.

    Padded with zeros to min(dA, dB); sums to 1 for a unit vector.
    """
    state = np.asarray(state, float).ravel()
    dA, dB = dims
    if dA * dB != state.size:
        raise DimensionMismatch(f"state has {state.size} amplitudes, dims give {dA * dB}")
    sv = np.linalg.svd(state.reshape(dA, dB), compute_uv=False) ** 2
    out = np.zeros(min(dA, dB))
    out[: sv.size] = np.sort(sv)[::-1]
    return out


def epr_schmidt_vector(s: int) -> np.ndarray:
    """Uniform Schmidt vector (2^-s, ..., 2^-s) of s shared EPR pairs."""
    return np.full(2**s, 2.0**-s)


def majorized_by(lhs, rhs, tol: float = 1e-12) -> bool:
    """True iff lhs is majorized by rhs: every prefix sum of the sorted lhs
    is at most the corresponding prefix sum of the sorted rhs, with equal
    totals.  Shorter vectors are zero-padded."""
    a = np.sort(np.asarray(lhs, float).ravel())[::-1]
    b = np.sort(np.asarray(rhs, float).ravel())[::-1]
    d = max(a.size, b.size)
    a = np.pad(a, (0, d - a.size))
    b = np.pad(b, (0, d - b.size))
    if abs(a.sum() - b.sum()) > tol:
        return False
    return bool(np.all(np.cumsum(a) <= np.cumsum(b) + tol))


def build_qc_hybrid(BF: BlockPsdFactorization, s: int, target=None, tol: ToleranceConfig = DEFAULT_TOL):
    """Quantum-classical hybrid: fixed s-EPR seed converted per branch by LOCC.

    Verifies Nielsen's criterion for every branch state against the uniform
    s-EPR Schmidt vector (it must hold; failure signals an internal bug) and
    charges the worst-case 2^s - 1 LOCC bits on top of the stage-1 bits.
    Returns (HybridProtocol, ResourceLedger).
    """
    H = build_cq_hybrid(BF, s, tol)
    epr = epr_schmidt_vector(s)
    for i, branch in enumerate(H.branches):
        lam = schmidt_vector(branch.state, (branch.r, branch.r))
        if not majorized_by(epr, np.pad(lam, (0, 2**s - lam.size)) if lam.size < 2**s else lam):
            raise MajorizationFailure(f"branch {i} state not reachable from {s} EPR pairs by LOCC")
    ledger = make_ledger(H, target=target, locc_bits=2**s - 1, tol=tol)
    return H, ledger


def make_ledger(H: HybridProtocol, target=None, locc_bits: int = 0, tol: ToleranceConfig = DEFAULT_TOL) -> ResourceLedger:
    """Assemble the resource ledger and evaluate the named bound checks."""
    r = len(H.branches)
    c = hybrid_classical_cost(r)
    ledger = ResourceLedger(qubits_used=H.s, classical_bits_stage1=c, classical_bits_locc=locc_bits)
    P = as_matrix(target) if target is not None else hybrid_exact_distribution(H)
    checks = [
        ("theorem1_hybrid_bits", H.classical_bits == c),
        ("lemma6_tradeoff", tradeoff_check(H.s, c, P, tol)),
    ]
    if locc_bits:
        checks.append(("prop4_qc_bits", ledger.total_classical_bits == qc_hybrid_cost_upper(r, H.s)))
    rank = numerical_rank(P, tol)
    prank_est = max(2**H.s * r, 1)  # witnessed: r branches of side <= 2^s
    t_lb, t_ub = t_bounds(P, prank_est, tol)
    checks.append(("corollary7_t_bounds", t_lb <= t_ub))
    checks.append(("eq7_t_upper", t_ub <= math.ceil(math.log2(prank_est)) if prank_est > 1 else t_ub == 0))
    ledger.bound_checks = checks
    return ledger


def simulate_hybrid(H: HybridProtocol, rng_seed: int, N: int, target=None, tol: ToleranceConfig = DEFAULT_TOL):
    """Sample N pairs: branch first, then outcome, from one Philox stream.

    Returns (samples, ResourceLedger); samples is an (N, 2) integer array.
    """
    if N < 1:
        raise ShapeMismatch("N must be >= 1")
    rng = _rng(rng_seed)
    U = rng.random((N, 2))  # row-major: per draw, branch uniform then outcome uniform
    w = H.weights / H.weights.sum()
    branch_idx = np.searchsorted(np.cumsum(w), U[:, 0], side="right")
    branch_idx = np.minimum(branch_idx, len(H.branches) - 1)
    samples = np.empty((N, 2), dtype=np.int64)
    for i, proto in enumerate(H.branches):
        mask = branch_idx == i
        if mask.any():
            samples[mask] = _inverse_cdf_pairs(exact_distribution(proto), U[mask, 1])
    ledger = make_ledger(H, target=target, tol=tol)
    return samples, ledger
