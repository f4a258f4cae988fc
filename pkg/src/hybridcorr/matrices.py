"""Dense real-matrix foundation: correlations, PSD tests, ranks, tolerances, I/O.

Matrices are plain 2-D float64 numpy arrays throughout the package.  A
"correlation" is a nonnegative matrix whose entries sum to 1; it is the joint
distribution two parties have to sample.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonNegativityViolation,
    NotSymmetric,
    ShapeMismatch,
    ZeroMatrix,
)

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "as_matrix",
    "check_correlation",
    "is_correlation",
    "normalize_to_correlation",
    "l1_distance",
    "numerical_rank",
    "is_psd",
    "symmetrize",
    "matrix_to_dict",
    "matrix_from_dict",
    "matrix_to_csv",
    "matrix_from_csv",
    "load_matrix",
]


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerance policy shared by all modules.

    rank_rel_tol: relative singular-value cutoff for numerical rank
    psd_min_eig:  most negative eigenvalue still accepted as PSD (<= 0)
    residual_tol: L1 residual below which a factorization counts as exact
    l1_eps:       user-set approximation budget (0 means exact mode)
    """

    rank_rel_tol: float = 1e-9
    psd_min_eig: float = -1e-9
    residual_tol: float = 1e-8
    l1_eps: float = 0.0

    def __post_init__(self):
        if self.rank_rel_tol < 0 or self.residual_tol < 0 or self.l1_eps < 0:
            raise ValueError("tolerances must be >= 0")
        if self.psd_min_eig > 0:
            raise ValueError("psd_min_eig must be <= 0")

    def as_dict(self) -> dict:
        return {
            "rank_rel_tol": self.rank_rel_tol,
            "psd_min_eig": self.psd_min_eig,
            "residual_tol": self.residual_tol,
            "l1_eps": self.l1_eps,
        }


DEFAULT_TOL = ToleranceConfig()

# absolute symmetry tolerance used by is_psd
_SYMMETRY_ATOL = 1e-12

# slack on the entry sum of a valid correlation
_CORRELATION_SUM_TOL = 1e-9


def as_matrix(data) -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting NaN/inf and empty shapes."""
    M = np.asarray(data, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.size == 0:
        raise ShapeMismatch(f"expected a nonempty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ShapeMismatch("matrix entries must be finite")
    return M


def is_correlation(P: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    P = as_matrix(P)
    return bool(P.min() >= -cfg.rank_rel_tol and abs(P.sum() - 1.0) <= _CORRELATION_SUM_TOL)


def check_correlation(P: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Validate correlation invariants, returning the coerced array."""
    P = as_matrix(P)
    if P.min() < -cfg.rank_rel_tol:
        raise NonNegativityViolation(f"entry {P.min():g} is negative")
    if abs(P.sum() - 1.0) > _CORRELATION_SUM_TOL:
        raise NonNegativityViolation(f"entries sum to {P.sum():.12g}, not 1")
    return P


def normalize_to_correlation(M, cfg: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Divide a nonnegative matrix by its entry sum so it becomes a correlation."""
    M = as_matrix(M)
    if M.min() < -cfg.rank_rel_tol:
        raise NonNegativityViolation(f"entry {M.min():g} is negative")
    M = np.clip(M, 0.0, None)
    total = M.sum()
    if total <= 0.0:
        raise ZeroMatrix("cannot normalize a matrix with no positive entry")
    return M / total


def l1_distance(P, Q) -> float:
    """Entrywise L1 distance, the paper-facing approximation metric."""
    P = as_matrix(P)
    Q = as_matrix(Q)
    if P.shape != Q.shape:
        raise ShapeMismatch(f"shape mismatch {P.shape} vs {Q.shape}")
    return float(np.abs(P - Q).sum())


def numerical_rank(M, cfg: ToleranceConfig = DEFAULT_TOL) -> int:
    """Number of singular values above rank_rel_tol * s_max (0 for the zero matrix)."""
    M = as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > cfg.rank_rel_tol * s[0]))


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def is_psd(M, cfg: ToleranceConfig = DEFAULT_TOL) -> bool:
    """True iff M is symmetric (within 1e-12) with min eigenvalue >= psd_min_eig."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"matrix of shape {M.shape} is not square")
    if np.abs(M - M.T).max() > _SYMMETRY_ATOL:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    eigvals = np.linalg.eigvalsh(symmetrize(M))
    return bool(eigvals.min() >= cfg.psd_min_eig)


# --- wire formats -----------------------------------------------------------
#
# JSON: {"rows": n, "cols": m, "entries": [row-major floats]}
# CSV:  plain rows of comma-separated decimals
# Both readers reject NaN/inf.


def matrix_to_dict(M: np.ndarray) -> dict:
    M = as_matrix(M)
    return {"rows": M.shape[0], "cols": M.shape[1], "entries": [float(v) for v in M.ravel()]}


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(d["rows"]), int(d["cols"]), d["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeMismatch(f"malformed matrix object: {exc}") from exc
    if rows <= 0 or cols <= 0:
        raise ShapeMismatch("rows and cols must be positive")
    arr = np.asarray(entries, dtype=float)
    if arr.size != rows * cols:
        raise ShapeMismatch(f"expected {rows * cols} entries, got {arr.size}")
    return as_matrix(arr.reshape(rows, cols))


def matrix_to_csv(M: np.ndarray) -> str:
    M = as_matrix(M)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in M:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = []
    for line in csv.reader(io.StringIO(text)):
        if not line:
            continue
        try:
            rows.append([float(v) for v in line])
        except ValueError as exc:
            raise ShapeMismatch(f"bad CSV value: {exc}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ShapeMismatch("CSV rows are empty or ragged")
    for r in rows:
        if any(math.isnan(v) or math.isinf(v) for v in r):
            raise ShapeMismatch("CSV entries must be finite")
    return as_matrix(rows)


def load_matrix(path: str) -> np.ndarray:
    """Read a matrix from a .json or .csv file (format chosen by extension).

    JSON inputs may be a bare matrix object or a report envelope carrying a
    "matrix" field, so CLI outputs can be fed straight back in.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".csv"):
        return matrix_from_csv(text)
    data = json.loads(text)
    if isinstance(data, dict) and "matrix" in data and "entries" not in data:
        data = data["matrix"]
    return matrix_from_dict(data)
