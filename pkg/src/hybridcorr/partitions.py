"""Combinatorial rectangle machinery.

A rectangle is a row subset times a column subset; a k-partition is a set of
pairwise disjoint rectangles covering every nonzero entry of the target,
each of (real) PSD rank at most k.  The minimum partition size upper-bounds
the k-block PSD rank: each rectangle becomes one branch of a block
factorization, weighted by its mass.

Rectangles may contain zero entries of the target; zeros only add
tr(C_x D_y) = 0 constraints that the per-rectangle witness search handles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExactSearchCapExceeded, InvariantViolation, ShapeMismatch
from .factorization import (
    BlockPsdFactorization,
    PsdFactorization,
    SearchConfig,
    psd_factorize,
    reconstruct,
)
from .matrices import DEFAULT_TOL, ToleranceConfig, as_matrix, numerical_rank

__all__ = [
    "Rectangle",
    "CapabilityOracle",
    "validate_partition",
    "rectangle_within_capability",
    "k_partition_exact",
    "k_partition_greedy",
    "partition_to_block_factorization",
    "EXACT_CELL_CAP",
]

EXACT_CELL_CAP = 64


@dataclass(frozen=True, order=True)
class Rectangle:
    """Canonical combinatorial rectangle: sorted row and column index tuples."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(set(int(i) for i in self.rows))))
        object.__setattr__(self, "cols", tuple(sorted(set(int(j) for j in self.cols))))
        if not self.rows or not self.cols:
            raise ShapeMismatch("rectangle row and column sets must be non-empty")

    def submatrix(self, P: np.ndarray) -> np.ndarray:
        return P[np.ix_(self.rows, self.cols)]

    def disjoint(self, other: "Rectangle") -> bool:
        return not (set(self.rows) & set(other.rows)) or not (set(self.cols) & set(other.cols))

    def contains(self, x: int, y: int) -> bool:
        return x in self.rows and y in self.cols


def _nonzero_cells(P, tol: ToleranceConfig):
    rows, cols = np.nonzero(P > tol.rank_rel_tol)
    return list(zip(rows.tolist(), cols.tolist()))


def validate_partition(P, rectangles, tol: ToleranceConfig = DEFAULT_TOL):
    """Check disjointness, nonzero coverage, and per-rectangle nonzeroness.

    Returns (ok, diagnostics); diagnostics name the violated invariant and
    the offending entry or rectangle.
    """
    P = as_matrix(P)
    n, m = P.shape
    diags = []
    rects = list(rectangles)
    for i, rect in enumerate(rects):
        if rect.rows[-1] >= n or rect.cols[-1] >= m:
            diags.append(f"rectangle {i} indexes outside the {n}x{m} matrix")
        elif rect.submatrix(P).max() <= tol.rank_rel_tol:
            diags.append(f"rectangle {i} contains no nonzero entry")
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if not rects[i].disjoint(rects[j]):
                x = sorted(set(rects[i].rows) & set(rects[j].rows))[0]
                y = sorted(set(rects[i].cols) & set(rects[j].cols))[0]
                diags.append(f"overlap: rectangles {i} and {j} share entry ({x},{y})")
    if not diags:
        for x, y in _nonzero_cells(P, tol):
            if not any(r.contains(x, y) for r in rects):
                diags.append(f"coverage: nonzero entry ({x},{y}) is uncovered")
                break
    return (not diags, diags)


class CapabilityOracle:
    """Memoized yes/no/unknown oracle for 'rectangle has PSD rank <= k'.

    no:      sqrt-rank lower bound already exceeds k (certified)
    yes:     witness factorization found at tolerance (certified, cached)
    unknown: search failed; treated as 'no' by the exact solver
    """

    def __init__(self, P, k: int, search: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL):
        self.P = as_matrix(P)
        self.k = int(k)
        self.search = search
        self.tol = tol
        self._cache: dict = {}

    def rank(self, rect: Rectangle) -> int:
        key = ("rank", rect)
        if key not in self._cache:
            self._cache[key] = numerical_rank(rect.submatrix(self.P), self.tol)
        return self._cache[key]

    def quick_no(self, rect: Rectangle) -> bool:
        """Certified 'no' from rank alone; monotone under growing the rectangle."""
        return self.rank(rect) > self.k * self.k

    def verdict(self, rect: Rectangle):
        """Returns (verdict, witness) with witness a PsdFactorization for 'yes'."""
        key = ("verdict", rect)
        if key in self._cache:
            return self._cache[key]
        if self.quick_no(rect):
            out = ("no", None)
        else:
            sub = rect.submatrix(self.P)
            target = sub / sub.sum()
            F, res = psd_factorize(target, self.k, self.search, self.tol)
            accept = max(self.tol.residual_tol, self.search.eps)
            out = ("yes", F) if res <= accept else ("unknown", None)
        self._cache[key] = out
        return out


def rectangle_within_capability(P, rect: Rectangle, k: int, search: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL) -> str:
    """Convenience wrapper around CapabilityOracle for a single rectangle."""
    return CapabilityOracle(P, k, search, tol).verdict(rect)[0]


# --- exact search -----------------------------------------------------------


def k_partition_exact(P, k: int, search: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL, cell_cap: int = EXACT_CELL_CAP):
    """Minimum-size k-partition by branch-and-bound over cell assignments.

    Cells are processed in row-major order; each uncovered nonzero cell is
    either absorbed into an existing group (if the grown rectangle stays
    disjoint from the others and its rank does not already rule out
    capability) or opens a new group.  A completed assignment is accepted
    only if every rectangle is capability-'yes'.
    """
    P = as_matrix(P)
    oracle = CapabilityOracle(P, k, search, tol)
    cells = _nonzero_cells(P, tol)
    if not cells:
        raise InvariantViolation("target has no nonzero entries")
    if len(cells) > cell_cap:
        raise ExactSearchCapExceeded(f"{len(cells)} nonzero cells exceed the exact-search cap {cell_cap}")

    # greedy gives the starting incumbent and an upper bound for pruning
    incumbent = k_partition_greedy(P, k, search, tol)
    best = [len(incumbent), incumbent]

    def covered(groups, x, y):
        return any(x in g[0] and y in g[1] for g in groups)

    def rect_of(g):
        return Rectangle(tuple(sorted(g[0])), tuple(sorted(g[1])))

    def recurse(groups, idx):
        while idx < len(cells) and covered(groups, *cells[idx]):
            idx += 1
        if len(groups) >= best[0]:
            return
        if idx == len(cells):
            rects = [rect_of(g) for g in groups]
            if all(oracle.verdict(r)[0] == "yes" for r in rects):
                best[0], best[1] = len(rects), rects
            return
        x, y = cells[idx]
        for gi, g in enumerate(groups):
            rows = g[0] | {x}
            cols = g[1] | {y}
            grown = (rows, cols)
            ok = True
            for gj, other in enumerate(groups):
                if gj != gi and (rows & other[0]) and (cols & other[1]):
                    ok = False
                    break
            if not ok:
                continue
            if oracle.quick_no(rect_of(grown)):
                continue
            recurse(groups[:gi] + [grown] + groups[gi + 1 :], idx + 1)
        if len(groups) + 1 < best[0]:
            recurse(groups + [({x}, {y})], idx + 1)

    recurse([], 0)
    return best[1]


# --- greedy search ----------------------------------------------------------


def k_partition_greedy(P, k: int, search: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL):
    """Grow maximal rectangles over uncovered nonzero cells, shrinking to capability.

    Seeds rectangles in row-major order, first extends along columns, then
    rows, keeping the grown rectangle disjoint from those already chosen,
    then removes the most recent extensions until the capability oracle says
    'yes'.  Always terminates: a single nonzero cell has PSD rank 1.
    """
    P = as_matrix(P)
    n, m = P.shape
    oracle = CapabilityOracle(P, k, search, tol)
    chosen: list[Rectangle] = []
    cells = _nonzero_cells(P, tol)

    def disjoint_from_chosen(rows, cols):
        return all(not (rows & set(r.rows)) or not (cols & set(r.cols)) for r in chosen)

    for x0, y0 in cells:
        if any(r.contains(x0, y0) for r in chosen):
            continue
        rows, cols = {x0}, {y0}
        added = []
        for y in range(m):
            if y not in cols and disjoint_from_chosen(rows, cols | {y}):
                if not oracle.quick_no(Rectangle(tuple(rows), tuple(sorted(cols | {y})))):
                    cols.add(y)
                    added.append(("col", y))
        for x in range(n):
            if x not in rows and disjoint_from_chosen(rows | {x}, cols):
                if not oracle.quick_no(Rectangle(tuple(sorted(rows | {x})), tuple(cols))):
                    rows.add(x)
                    added.append(("row", x))
        while True:
            rect = Rectangle(tuple(sorted(rows)), tuple(sorted(cols)))
            if oracle.verdict(rect)[0] == "yes":
                chosen.append(rect)
                break
            if not added:
                raise InvariantViolation(f"cannot certify the single cell ({x0},{y0}) at k={k}")
            kind, idx = added.pop()
            (cols if kind == "col" else rows).discard(idx)
    return chosen


# --- partition -> block factorization ---------------------------------------


def partition_to_block_factorization(P, rectangles, k: int, search: SearchConfig = SearchConfig(), tol: ToleranceConfig = DEFAULT_TOL) -> BlockPsdFactorization:
    """Turn a valid k-partition into a block factorization certifying kprank <= size.

    Branch i is the rectangle's normalized submatrix zero-padded to full
    shape, with weight equal to the rectangle's mass; witnesses come from
    the capability oracle.
    """
    P = as_matrix(P)
    n, m = P.shape
    ok, diags = validate_partition(P, rectangles, tol)
    if not ok:
        raise InvariantViolation("; ".join(diags))
    oracle = CapabilityOracle(P, k, search, tol)
    weights = []
    branches = []
    for rect in rectangles:
        verdict, witness = oracle.verdict(rect)
        if verdict != "yes":
            raise InvariantViolation(f"rectangle {rect.rows}x{rect.cols} is not capability-yes (verdict {verdict})")
        mass = float(rect.submatrix(P).sum())
        side = witness.r
        rowf = np.zeros((n, side, side))
        colf = np.zeros((m, side, side))
        rowf[list(rect.rows)] = witness.row_factors
        colf[list(rect.cols)] = witness.col_factors
        weights.append(mass)
        branches.append(PsdFactorization(rowf, colf))
    w = np.asarray(weights)
    return BlockPsdFactorization(block_size=k, weights=w / w.sum(), branches=tuple(branches))
