"""PSD, nonnegative, and block PSD factorization search.

A PSD factorization of a nonnegative matrix P writes P(x,y) = tr(C_x D_y)
with real symmetric PSD factors; the smallest admissible side length is the
(real) PSD rank.  A block factorization splits P into a weighted mixture of
correlations, each carrying its own PSD factorization of side at most k; the
smallest number of branches is the k-block PSD rank, and it prices the
classical communication of a classical-quantum hybrid protocol.

Search uses the Gram-root parametrization C = A A^T (PSD by construction,
unconstrained smooth loss) with quasi-Newton descent and deterministic
multi-start.  Closed forms are used where they exist (EDM family, Kronecker
composition).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize, nnls
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvariantViolation, ShapeMismatch, SizeCapExceeded
from .generators import _check_points
from .matrices import (
    DEFAULT_TOL,
    ToleranceConfig,
    as_matrix,
    is_psd,
    l1_distance,
    normalize_to_correlation,
)

__all__ = [
    "SearchConfig",
    "PsdFactorization",
    "BlockPsdFactorization",
    "CertificationReport",
    "reconstruct",
    "edm_psd_factorization",
    "tensor_compose",
    "scalar_factorization",
    "nmf",
    "psd_factorize",
    "kblock_factorize",
    "certify_block_factorization",
]

_FACTOR_SIDE_CAP = 256
_PRUNE_WEIGHT = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    """Deterministic search budget: same seed + budget => same result."""

    seed: int = 0
    n_starts: int = 20
    max_iter: int = 5000
    eps: float = 0.0  # approximate mode: stop once L1 residual <= eps (0 = exact)

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFF, *key])


@dataclass(frozen=True)
class PsdFactorization:
    """Families {C_x}, {D_y} of r x r symmetric PSD factors, stacked on axis 0."""

    row_factors: np.ndarray  # (n, r, r)
    col_factors: np.ndarray  # (m, r, r)

    def __post_init__(self):
        C, D = np.asarray(self.row_factors, float), np.asarray(self.col_factors, float)
        if C.ndim != 3 or D.ndim != 3 or C.shape[1:] != D.shape[1:] or C.shape[1] != C.shape[2]:
            raise ShapeMismatch("factor stacks must be (n,r,r) and (m,r,r)")
        object.__setattr__(self, "row_factors", C)
        object.__setattr__(self, "col_factors", D)

    @property
    def r(self) -> int:
        return self.row_factors.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.row_factors.shape[0], self.col_factors.shape[0])

    def validate(self, cfg: ToleranceConfig = DEFAULT_TOL) -> None:
        for name, stack in (("row", self.row_factors), ("col", self.col_factors)):
            for i, M in enumerate(stack):
                if not is_psd(M, cfg):
                    raise InvariantViolation(f"{name} factor {i} is not PSD")


@dataclass(frozen=True)
class BlockPsdFactorization:
    """Branch weights plus one side-<=k PSD factorization per branch.

    Branch i reconstructs a correlation P_i; the mixture sum_i w_i P_i
    reconstructs the target.  Zero-weight branches are forbidden.
    """

    block_size: int
    weights: np.ndarray
    branches: tuple[PsdFactorization, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, float).ravel()
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "branches", tuple(self.branches))
        if w.size != len(self.branches) or w.size == 0:
            raise ShapeMismatch("one weight per branch required")
        if any(b.r > self.block_size for b in self.branches):
            raise ShapeMismatch("branch factor side exceeds the block size")

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def mixture(self) -> np.ndarray:
        return sum(w * reconstruct(b) for w, b in zip(self.weights, self.branches))


def reconstruct(F: PsdFactorization) -> np.ndarray:
    """Entry (x,y) = tr(C_x D_y)."""
    return np.einsum("xab,yba->xy", F.row_factors, F.col_factors)


def scalar_factorization(value: float = 1.0) -> PsdFactorization:
    """r=1 factorization of [[value]] (identity element for tensor_compose)."""
    return PsdFactorization(np.array([[[float(value)]]]), np.array([[[1.0]]]))


def edm_psd_factorization(points, scale: float = 1.0) -> PsdFactorization:
    """Exact r=2 witness for scale * EDM(points).

    C_i = scale * (1, c_i)(1, c_i)^T and D_j = (c_j, -1)(c_j, -1)^T give
    tr(C_i D_j) = scale * ((1, c_i) . (c_j, -1))^2 = scale * (c_i - c_j)^2.
    """
    c = _check_points(points)
    rows = np.array([scale * np.outer([1.0, ci], [1.0, ci]) for ci in c])
    cols = np.array([np.outer([cj, -1.0], [cj, -1.0]) for cj in c])
    return PsdFactorization(rows, cols)


def tensor_compose(F1: PsdFactorization, F2: PsdFactorization, cap: int = _FACTOR_SIDE_CAP) -> PsdFactorization:
    """Kronecker composition: reconstruct(result) = reconstruct(F1) (x) reconstruct(F2)."""
    if F1.r * F2.r > cap:
        raise SizeCapExceeded(f"composed side {F1.r * F2.r} exceeds cap {cap}")
    rows = np.array([np.kron(a, b) for a in F1.row_factors for b in F2.row_factors])
    cols = np.array([np.kron(a, b) for a in F1.col_factors for b in F2.col_factors])
    return PsdFactorization(rows, cols)


# --- nonnegative factorization (alternating NNLS) ---------------------------


def nmf(P, r: int, cfg: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL):
    """Multi-start alternating nonnegative least squares.

    Returns (W, H, residual) with W >= 0 of shape (n, r), H >= 0 of shape
    (r, m) and residual the L1 distance between P and W @ H.
    """
    P = as_matrix(P)
    n, m = P.shape
    max_sweeps = min(cfg.max_iter, 500)
    best = None
    for start in range(cfg.n_starts):
        rng = cfg.rng(11, start)
        W = rng.uniform(0.1, 1.0, size=(n, r)) * np.sqrt(P.mean() / max(r, 1))
        H = rng.uniform(0.1, 1.0, size=(r, m))
        prev = np.inf
        for _ in range(max_sweeps):
            for j in range(m):
                H[:, j], _ = nnls(W, P[:, j])
            for i in range(n):
                W[i, :], _ = nnls(H.T, P[i, :])
            err = float(np.linalg.norm(P - W @ H))
            if prev - err < 1e-14:
                break
            prev = err
        res = l1_distance(P, W @ H)
        if best is None or res < best[2] - 1e-15:
            best = (W.copy(), H.copy(), res)
        if best[2] <= max(cfg.eps, 0.1 * tol.residual_tol):
            break
    return best


# --- PSD factorization search -----------------------------------------------


def _psd_loss_grad(theta, P, r):
    n, m = P.shape
    A = theta[: n * r * r].reshape(n, r, r)
    B = theta[n * r * r :].reshape(m, r, r)
    C = A @ A.transpose(0, 2, 1)
    D = B @ B.transpose(0, 2, 1)
    E = np.einsum("xab,yab->xy", C, D) - P
    loss = float((E * E).sum())
    GA = 4.0 * np.einsum("xy,yab->xab", E, D) @ A
    GB = 4.0 * np.einsum("xy,xab->yab", E, C) @ B
    return loss, np.concatenate([GA.ravel(), GB.ravel()])


def _minimize(theta0, fun, args, max_iter):
    res = minimize(
        fun,
        theta0,
        args=args,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "maxfun": 2 * max_iter, "ftol": 1e-18, "gtol": 1e-14},
    )
    return res.x, float(res.fun)


# L-BFGS stalls around squared losses of ~1e-16; a trust-region Gauss-Newton
# polish on the residual vector recovers the last few digits.
_POLISH_THRESHOLD = 1e-4


def _psd_residual(theta, P, r):
    n, m = P.shape
    A = theta[: n * r * r].reshape(n, r, r)
    B = theta[n * r * r :].reshape(m, r, r)
    C = A @ A.transpose(0, 2, 1)
    D = B @ B.transpose(0, 2, 1)
    return (np.einsum("xab,yab->xy", C, D) - P).ravel()


def _psd_jacobian(theta, P, r):
    n, m = P.shape
    A = theta[: n * r * r].reshape(n, r, r)
    B = theta[n * r * r :].reshape(m, r, r)
    C = A @ A.transpose(0, 2, 1)
    D = B @ B.transpose(0, 2, 1)
    J = np.zeros((n * m, theta.size))
    DA = 2.0 * np.einsum("yab,xbc->xyac", D, A)  # d r_xy / d A_x
    CB = 2.0 * np.einsum("xab,ybc->xyac", C, B)  # d r_xy / d B_y
    rr = r * r
    for x in range(n):
        rows = slice(x * m, (x + 1) * m)
        J[rows, x * rr : (x + 1) * rr] = DA[x].reshape(m, rr)
    for y in range(m):
        J[y::m, n * rr + y * rr : n * rr + (y + 1) * rr] = CB[:, y].reshape(n, rr)
    return J


def _polish_psd(theta, P, r, max_nfev=200):
    res = least_squares(
        _psd_residual,
        theta,
        jac=_psd_jacobian,
        args=(P, r),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    return res.x, float(2 * res.cost)


def _kblock_residual(theta, P, k, r):
    n, m = P.shape
    A = theta[: r * n * k * k].reshape(r, n, k, k)
    B = theta[r * n * k * k :].reshape(r, m, k, k)
    C = A @ A.transpose(0, 1, 3, 2)
    D = B @ B.transpose(0, 1, 3, 2)
    return (np.einsum("lxab,lyab->xy", C, D) - P).ravel()


def _kblock_jacobian(theta, P, k, r):
    n, m = P.shape
    A = theta[: r * n * k * k].reshape(r, n, k, k)
    B = theta[r * n * k * k :].reshape(r, m, k, k)
    C = A @ A.transpose(0, 1, 3, 2)
    D = B @ B.transpose(0, 1, 3, 2)
    J = np.zeros((n * m, theta.size))
    DA = 2.0 * np.einsum("lyab,lxbc->lxyac", D, A)
    CB = 2.0 * np.einsum("lxab,lybc->lxyac", C, B)
    kk = k * k
    for l in range(r):
        for x in range(n):
            rows = slice(x * m, (x + 1) * m)
            J[rows, (l * n + x) * kk : (l * n + x + 1) * kk] = DA[l, x].reshape(m, kk)
        off = r * n * kk
        for y in range(m):
            J[y::m, off + (l * m + y) * kk : off + (l * m + y + 1) * kk] = CB[l, :, y].reshape(n, kk)
    return J


def _polish_kblock(theta, P, k, r, max_nfev=200):
    res = least_squares(
        _kblock_residual,
        theta,
        jac=_kblock_jacobian,
        args=(P, k, r),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    return res.x, float(2 * res.cost)


def _pad_side(A: np.ndarray, r: int) -> np.ndarray:
    """Zero-pad a stack of r0 x r0 factors to side r (reconstruction unchanged)."""
    r0 = A.shape[1]
    out = np.zeros((A.shape[0], r, r))
    out[:, :r0, :r0] = A
    return out


def _init_scale(P, r):
    mean = max(float(np.abs(P).mean()), 1e-12)
    return (mean / r**3) ** 0.25


def psd_factorize(P, r: int, cfg: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL):
    """Search a side-r PSD factorization of P, best over a deterministic multi-start.

    Runs a cascade over sides 1..r, warm-starting each side with the
    zero-padded best of the previous one, so the residual is non-increasing
    in r for a fixed seed schedule.  Returns (PsdFactorization, L1 residual).
    """
    P = as_matrix(P)
    if r < 1:
        raise ShapeMismatch("r must be >= 1")
    n, m = P.shape
    stop_l1 = cfg.eps if cfg.eps > 0 else 0.01 * tol.residual_tol
    warm = None
    for side in range(1, r + 1):
        starts = []
        if warm is not None:
            A, B = warm
            starts.append(np.concatenate([_pad_side(A, side).ravel(), _pad_side(B, side).ravel()]))
        scale = _init_scale(P, side)
        for j in range(cfg.n_starts):
            rng = cfg.rng(23, side, j)
            starts.append(rng.normal(0.0, scale, size=(n + m) * side * side))
        best = None
        for theta0 in starts:
            theta, loss = _minimize(theta0, _psd_loss_grad, (P, side), cfg.max_iter)
            if loss < _POLISH_THRESHOLD:
                theta, loss = _polish_psd(theta, P, side)
            if best is None or loss < best[1] - 1e-18:
                best = (theta, loss)
            A = best[0][: n * side * side].reshape(n, side, side)
            B = best[0][n * side * side :].reshape(m, side, side)
            if _l1_of(A, B, P) <= stop_l1:
                break
        A = best[0][: n * side * side].reshape(n, side, side)
        B = best[0][n * side * side :].reshape(m, side, side)
        warm = (A, B)
        if _l1_of(A, B, P) <= stop_l1:
            break
    A, B = warm
    A, B = _pad_side(A, r), _pad_side(B, r)
    F = PsdFactorization(A @ A.transpose(0, 2, 1), B @ B.transpose(0, 2, 1))
    return F, l1_distance(reconstruct(F), P)


def _l1_of(A, B, P):
    C = A @ A.transpose(0, 2, 1)
    D = B @ B.transpose(0, 2, 1)
    return float(np.abs(np.einsum("xab,yab->xy", C, D) - P).sum())


# --- k-block PSD factorization search ---------------------------------------


def _kblock_loss_grad(theta, P, k, r):
    n, m = P.shape
    A = theta[: r * n * k * k].reshape(r, n, k, k)
    B = theta[r * n * k * k :].reshape(r, m, k, k)
    C = A @ A.transpose(0, 1, 3, 2)
    D = B @ B.transpose(0, 1, 3, 2)
    E = np.einsum("lxab,lyab->xy", C, D) - P
    loss = float((E * E).sum())
    GA = 4.0 * np.einsum("xy,lyab->lxab", E, D) @ A
    GB = 4.0 * np.einsum("xy,lxab->lyab", E, C) @ B
    return loss, np.concatenate([GA.ravel(), GB.ravel()])


def _support_components(P, tol: ToleranceConfig):
    """Connected components of the bipartite support graph of P.

    Returns a list of (row_indices, col_indices) pairs; block-diagonal
    correlations decompose into one component per block.
    """
    n, m = P.shape
    mask = P > tol.rank_rel_tol
    rows, cols = np.nonzero(mask)
    adj = csr_matrix((np.ones(rows.size), (rows, cols + n)), shape=(n + m, n + m))
    ncomp, labels = connected_components(adj + adj.T, directed=False)
    comps = []
    for c in range(ncomp):
        ridx = np.nonzero(labels[:n] == c)[0]
        cidx = np.nonzero(labels[n:] == c)[0]
        if ridx.size and cidx.size and mask[np.ix_(ridx, cidx)].any():
            comps.append((ridx, cidx))
    return comps


def _informed_start(P, k, r, cfg: SearchConfig, tol: ToleranceConfig):
    """Build a start vector by factorizing support components independently.

    Only applicable when the support splits into 2..r components; each
    component gets its own branch seeded from a small per-component search.
    """
    comps = _support_components(P, tol)
    if not 2 <= len(comps) <= r:
        return None
    sub_cfg = SearchConfig(seed=cfg.seed, n_starts=max(5, cfg.n_starts // 2), max_iter=cfg.max_iter)
    n, m = P.shape
    A = np.zeros((r, n, k, k))
    B = np.zeros((r, m, k, k))
    for l, (ridx, cidx) in enumerate(comps):
        sub = P[np.ix_(ridx, cidx)]
        mass = sub.sum()
        F, res = psd_factorize(sub / mass, k, sub_cfg, tol)
        if res > max(tol.residual_tol, cfg.eps) * 10:
            return None
        # branch reconstructs mass * normalized submatrix on its own rows/cols
        rootC = _psd_root(mass * F.row_factors)
        rootD = _psd_root(F.col_factors)
        A[l, ridx] = rootC
        B[l, cidx] = rootD
    return np.concatenate([A.ravel(), B.ravel()])


def _psd_root(stack):
    """Symmetric PSD square roots of a stack of symmetric matrices."""
    w, V = np.linalg.eigh(0.5 * (stack + stack.transpose(0, 2, 1)))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)[:, None, :]) @ V.transpose(0, 2, 1)


def kblock_factorize(P, k: int, r: int, cfg: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL):
    """Search an r-branch factorization with per-branch PSD side k.

    Branch weights are carried implicitly as branch masses (the search runs
    over an unconstrained block-diagonal Gram parametrization); the returned
    BlockPsdFactorization normalizes each branch into a correlation and its
    mass into a weight.  Returns (BlockPsdFactorization, L1 residual).
    """
    P = as_matrix(P)
    if k < 1 or r < 1:
        raise ShapeMismatch("k and r must be >= 1")
    n, m = P.shape
    stop_l1 = cfg.eps if cfg.eps > 0 else 0.01 * tol.residual_tol
    starts = []
    informed = _informed_start(P, k, r, cfg, tol)
    if informed is not None:
        starts.append(informed)
    scale = _init_scale(P, k) / max(r, 1) ** 0.25
    for j in range(cfg.n_starts):
        rng = cfg.rng(37, j)
        starts.append(rng.normal(0.0, scale, size=r * (n + m) * k * k))
    best = None
    for theta0 in starts:
        theta, loss = _minimize(theta0, _kblock_loss_grad, (P, k, r), cfg.max_iter)
        if loss < _POLISH_THRESHOLD:
            theta, loss = _polish_kblock(theta, P, k, r)
        if best is None or loss < best[1] - 1e-18:
            best = (theta, loss)
        if _kblock_l1(best[0], P, k, r) <= stop_l1:
            break
    return _assemble_kblock(best[0], P, k, r)


def _kblock_l1(theta, P, k, r):
    n, m = P.shape
    A = theta[: r * n * k * k].reshape(r, n, k, k)
    B = theta[r * n * k * k :].reshape(r, m, k, k)
    C = A @ A.transpose(0, 1, 3, 2)
    D = B @ B.transpose(0, 1, 3, 2)
    return float(np.abs(np.einsum("lxab,lyab->xy", C, D) - P).sum())


def _assemble_kblock(theta, P, k, r):
    n, m = P.shape
    A = theta[: r * n * k * k].reshape(r, n, k, k)
    B = theta[r * n * k * k :].reshape(r, m, k, k)
    C = A @ A.transpose(0, 1, 3, 2)
    D = B @ B.transpose(0, 1, 3, 2)
    Q = np.einsum("lxab,lyab->lxy", C, D)
    masses = Q.sum(axis=(1, 2))
    keep = np.nonzero(masses > _PRUNE_WEIGHT)[0]
    if keep.size == 0:
        keep = np.array([int(np.argmax(masses))])
    weights = masses[keep] / masses[keep].sum()
    branches = tuple(
        PsdFactorization(C[l] / masses[l], D[l]) for l in keep
    )
    BF = BlockPsdFactorization(block_size=k, weights=weights, branches=branches)
    return BF, l1_distance(BF.mixture(), P)


# --- certification ----------------------------------------------------------


@dataclass
class CertificationReport:
    """Re-verification of a block factorization from its assembled block-diagonal form."""

    ok: bool
    failures: list = field(default_factory=list)
    max_entry_error: float = float("nan")
    l1_residual: float = float("nan")
    classical_bits: int = 0

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failures": list(self.failures),
            "max_entry_error": self.max_entry_error,
            "l1_residual": self.l1_residual,
            "classical_bits": self.classical_bits,
        }


def certify_block_factorization(P, BF: BlockPsdFactorization, tol: ToleranceConfig = DEFAULT_TOL) -> CertificationReport:
    """Materialize the block-diagonal factors and re-verify every invariant.

    Builds C_x = diag(w_1 C_x^1, ..., w_r C_x^r) and D_y = diag(D_y^1, ...),
    checks PSD-ness of each block, branch-correlation validity, weight
    validity, and recomputes tr(C_x D_y) against P.
    """
    P = as_matrix(P)
    n, m = P.shape
    failures = []
    w = BF.weights
    if abs(w.sum() - 1.0) > 1e-9:
        failures.append(f"WeightInvariant: weights sum to {w.sum():.12g}")
    if w.min() <= 0:
        failures.append(f"WeightInvariant: branch {int(np.argmin(w))} has weight {w.min():g}")
    for l, branch in enumerate(BF.branches):
        if branch.shape != (n, m):
            failures.append(f"branch {l}: shape {branch.shape} does not match target {P.shape}")
            continue
        for name, stack in (("row", branch.row_factors), ("col", branch.col_factors)):
            for i, M in enumerate(stack):
                try:
                    ok = is_psd(M, tol)
                except Exception as exc:  # non-symmetric blocks also fail here
                    ok, exc_msg = False, str(exc)
                    failures.append(f"branch {l} {name} factor {i}: {exc_msg}")
                    continue
                if not ok:
                    failures.append(f"branch {l} {name} factor {i} is not PSD")
        recon = reconstruct(branch)
        if recon.min() < -1e-10:
            failures.append(f"branch {l} reconstructs a negative entry {recon.min():g}")
        if abs(recon.sum() - 1.0) > max(tol.residual_tol, 1e-6):
            failures.append(f"branch {l} reconstruction sums to {recon.sum():.9g}, not 1")
    if failures:
        return CertificationReport(ok=False, failures=failures)

    k, r = BF.block_size, BF.branch_count
    sides = [b.r for b in BF.branches]
    total = sum(sides)
    Pw = np.zeros((n, m))
    for x in range(n):
        Cx = np.zeros((total, total))
        off = 0
        for l, branch in enumerate(BF.branches):
            Cx[off : off + sides[l], off : off + sides[l]] = w[l] * branch.row_factors[x]
            off += sides[l]
        for y in range(m):
            Dy = np.zeros((total, total))
            off = 0
            for l, branch in enumerate(BF.branches):
                Dy[off : off + sides[l], off : off + sides[l]] = branch.col_factors[y]
                off += sides[l]
            Pw[x, y] = np.trace(Cx @ Dy)
    max_err = float(np.abs(Pw - P).max())
    l1 = l1_distance(Pw, P)
    bits = int(np.ceil(np.log2(r))) if r > 1 else 0
    ok = l1 <= max(tol.residual_tol, tol.l1_eps)
    if not ok:
        failures.append(f"reconstruction L1 residual {l1:g} exceeds tolerance")
    return CertificationReport(ok=ok, failures=failures, max_entry_error=max_err, l1_residual=l1, classical_bits=bits)
