"""Constructors for the named matrix families used as targets and test corpus.

Euclidean distance matrices (small rank, PSD-friendly, large nonnegative
rank), their normalized correlations and tensor powers, block-diagonal
mixtures, and the mod-2 inner-product-squared family.
"""

from __future__ import annotations

import numpy as np

from .errors import DuplicatePoints, ShapeMismatch, SizeCapExceeded, WeightMismatch
from .matrices import DEFAULT_TOL, ToleranceConfig, as_matrix, check_correlation, normalize_to_correlation

__all__ = [
    "edm",
    "edm_correlation",
    "tensor_power",
    "block_diagonal_mix",
    "inner_product_squared_matrix",
    "DEFAULT_SIZE_CAP",
]

# hard stop against accidental exponential blowup from CLI input
DEFAULT_SIZE_CAP = 4096

_POINT_SEPARATION = 1e-12


def _check_points(points) -> np.ndarray:
    c = np.asarray(points, dtype=float).ravel()
    if c.size < 2:
        raise DuplicatePoints("need at least 2 points")
    if not np.all(np.isfinite(c)):
        raise DuplicatePoints("points must be finite")
    diff = np.abs(c[:, None] - c[None, :])
    np.fill_diagonal(diff, np.inf)
    if diff.min() <= _POINT_SEPARATION:
        raise DuplicatePoints("points must be pairwise distinct")
    return c


def edm(points) -> np.ndarray:
    """Euclidean distance matrix with entry (i,j) = (c_i - c_j)^2."""
    c = _check_points(points)
    return (c[:, None] - c[None, :]) ** 2


def edm_correlation(points) -> np.ndarray:
    """EDM normalized to entry sum 1."""
    return normalize_to_correlation(edm(points))


def tensor_power(P, k: int, cap: int = DEFAULT_SIZE_CAP) -> np.ndarray:
    """Kronecker k-th power of a correlation; remains a correlation."""
    P = check_correlation(P)
    if k < 1:
        raise ShapeMismatch("power must be >= 1")
    n, m = P.shape
    if n**k > cap or m**k > cap:
        raise SizeCapExceeded(f"tensor power would be {n**k}x{m**k}, cap is {cap}")
    out = P
    for _ in range(k - 1):
        out = np.kron(out, P)
    return out


def block_diagonal_mix(parts, weights, cap: int = DEFAULT_SIZE_CAP) -> np.ndarray:
    """Block-diagonal mixture: block i equals weights[i] * parts[i].

    With uniform weights over 2^k equal-shape correlations this is the
    standard diagonal family whose PSD rank adds up across blocks.
    """
    parts = [check_correlation(p) for p in parts]
    w = np.asarray(weights, dtype=float).ravel()
    if len(parts) != w.size or w.size == 0:
        raise WeightMismatch(f"{len(parts)} parts but {w.size} weights")
    if w.min() < 0 or abs(w.sum() - 1.0) > 1e-9:
        raise WeightMismatch("weights must be nonnegative and sum to 1")
    rows = sum(p.shape[0] for p in parts)
    cols = sum(p.shape[1] for p in parts)
    if rows > cap or cols > cap:
        raise SizeCapExceeded(f"result would be {rows}x{cols}, cap is {cap}")
    out = np.zeros((rows, cols))
    r = c = 0
    for wi, p in zip(w, parts):
        out[r : r + p.shape[0], c : c + p.shape[1]] = wi * p
        r += p.shape[0]
        c += p.shape[1]
    return out


def inner_product_squared_matrix(n: int, cap: int = 1024) -> np.ndarray:
    """2^n x 2^n 0/1 matrix over n-bit strings: 1 iff the mod-2 inner product is 0.

    Strings are ordered lexicographically with the leftmost bit most
    significant, so string index == integer value.
    """
    if n < 1:
        raise ShapeMismatch("n must be >= 1")
    if 2**n > cap:
        raise SizeCapExceeded(f"2^{n} exceeds the size cap {cap}")
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    inner = (bits @ bits.T) & 1
    return as_matrix((1 - inner) ** 2)


def edm_family_blockdiag(point_sets, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Uniform block-diagonal mixture of EDM correlations, one per point set."""
    parts = [edm_correlation(ps) for ps in point_sets]
    w = np.full(len(parts), 1.0 / len(parts))
    return block_diagonal_mix(parts, w)
