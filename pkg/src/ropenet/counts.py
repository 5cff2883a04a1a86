"""Randomized-lasso neighborhood selection over resamples: the count matrix W."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed

from ._kernels import cd_path
from .graphs import EdgeSet, as_values

logger = logging.getLogger(__name__)

CD_TOL = 1e-7
CD_MAX_SWEEPS = 100_000

RESAMPLE_KINDS = ("bootstrap", "subsample")


def make_grid(lambda_min: float, lambda_max: float, steps: int) -> np.ndarray:
    """Evenly spaced penalty grid from lambda_min to lambda_max inclusive."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if steps == 1:
        grid = np.array([lambda_min], dtype=float)
    else:
        if not lambda_min < lambda_max:
            raise ValueError("lambda_min must be smaller than lambda_max")
        grid = np.linspace(lambda_min, lambda_max, steps)
    return check_grid(grid)


def check_grid(lambdas) -> np.ndarray:
    """Validate a penalty grid: positive, strictly increasing, nonempty."""
    grid = np.asarray(lambdas, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("penalty grid must be a nonempty 1-d sequence")
    if not (grid > 0).all():
        raise ValueError("penalties must be positive")
    if grid.size > 1 and not (np.diff(grid) > 0).all():
        raise ValueError("penalties must be strictly increasing")
    return grid


@dataclass(frozen=True)
class ResamplePlan:
    """How to resample rows and randomize penalties across B repetitions."""

    kind: str = "bootstrap"
    B: int = 500
    subsample_size: Optional[int] = None
    weakness: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in RESAMPLE_KINDS:
            raise ValueError(f"kind must be one of {RESAMPLE_KINDS}")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if not 0 < self.weakness <= 1:
            raise ValueError("weakness must be in (0, 1]")

    def rows_for(self, n: int, b: int) -> np.ndarray:
        """Row indices of resample b; deterministic given (seed, b)."""
        rng = np.random.default_rng([self.seed, b])
        if self.kind == "bootstrap":
            return rng.integers(0, n, size=n)
        m = self.subsample_size if self.subsample_size is not None else n // 2
        if not 2 <= m < n:
            raise ValueError("subsample_size must be in [2, n)")
        return rng.choice(n, size=m, replace=False)


def pair_index(i, j, d: int):
    """Row index of edge (i, j), i < j, in the row-major upper triangle."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * (2 * d - i - 1) // 2 + (j - i - 1)


def _row_offsets(d: int) -> np.ndarray:
    i = np.arange(d, dtype=np.int64)
    return i * (2 * d - i - 1) // 2


def index_pairs(idx, d: int) -> np.ndarray:
    """Inverse of pair_index: (m, 2) array of node pairs."""
    idx = np.asarray(idx, dtype=np.int64)
    offsets = _row_offsets(d)
    i = np.searchsorted(offsets, idx, side="right") - 1
    j = idx - offsets[i] + i + 1
    return np.column_stack([i, j])


@dataclass
class CountMatrix:
    """Edge-presence counts W: one row per potential edge, one column per penalty.

    Rows cover all p = d(d-1)/2 potential edges in row-major upper-triangle
    order, so per-penalty histograms account for never-selected edges.
    """

    counts: np.ndarray
    lambdas: np.ndarray
    B: int
    d: int
    n: int
    plan: ResamplePlan
    per_resample: Optional[List[List[np.ndarray]]] = field(
        default=None, repr=False, compare=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        self.lambdas = check_grid(self.lambdas)
        p = self.d * (self.d - 1) // 2
        if self.counts.shape != (p, self.lambdas.size):
            raise ValueError("counts must have shape (d(d-1)/2, len(lambdas))")
        if self.counts.min() < 0 or self.counts.max() > self.B:
            raise ValueError("counts must lie in [0, B]")

    @property
    def p(self) -> int:
        return self.counts.shape[0]

    def row_of(self, i: int, j: int) -> int:
        if not 0 <= i < j < self.d:
            raise ValueError("need 0 <= i < j < d")
        return int(pair_index(i, j, self.d))

    def column(self, k: int) -> np.ndarray:
        return self.counts[:, k]

    def histogram(self, k: int) -> "CountHistogram":
        from .mixture import CountHistogram

        bins = np.bincount(self.counts[:, k], minlength=self.B + 1)
        return CountHistogram(B=self.B, bins=bins, p=self.p)

    def nonzero_rows(self) -> np.ndarray:
        """Indices of edges selected at least once at any penalty."""
        return np.flatnonzero(self.counts.any(axis=1))


def randomized_weights(d: int, weakness: float, rng: np.random.Generator) -> np.ndarray:
    """Per-predictor penalty weights drawn i.i.d. from the two-point {weakness, 1}."""
    if not 0 < weakness <= 1:
        raise ValueError("weakness must be in (0, 1]")
    if d == 0:
        return np.empty(0)
    return np.where(rng.integers(0, 2, size=d) == 1, 1.0, weakness)


def lasso_fit(X, response: int, lam: float, penalty_weights=None) -> np.ndarray:
    """Weighted lasso of column ``response`` on the remaining columns.

    Solves (1/(2n))||x_r - X beta||^2 + lam * sum_k w_k |beta_k| by cyclic
    coordinate descent; beta[response] is constrained to zero. Assumes the
    columns of X are standardized.
    """
    arr = as_values(X)
    n, d = arr.shape
    if not 0 <= response < d:
        raise ValueError("response must index a column of X")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if penalty_weights is None:
        penalty_weights = np.ones(d)
    weights = np.asarray(penalty_weights, dtype=float)
    if weights.shape != (d,) or not ((weights > 0) & (weights <= 1)).all():
        raise ValueError("penalty_weights must be d values in (0, 1]")
    G = arr.T @ arr / n
    coefs, sweeps = cd_path(G, np.ascontiguousarray(G[:, response]), weights,
                            np.array([lam]), response, CD_TOL, CD_MAX_SWEEPS)
    if sweeps[0] >= CD_MAX_SWEEPS:
        raise RuntimeError("coordinate descent did not converge")
    return coefs[:, 0]


def standardize(arr: np.ndarray) -> tuple[np.ndarray, int]:
    """Center and scale columns to unit sd; returns (Z, n_constant_columns).

    Constant columns become all-zero, which leaves them permanently inactive
    in the lasso.
    """
    mu = arr.mean(axis=0)
    sd = arr.std(axis=0)
    zero = sd == 0
    n_zero = int(zero.sum())
    if n_zero:
        sd = sd.copy()
        sd[zero] = 1.0
    return (arr - mu) / sd, n_zero


def neighborhood_edges(X, lam: float, rng: np.random.Generator,
                       weakness: float = 1.0) -> EdgeSet:
    """One pass of randomized-lasso neighborhood selection with the OR rule."""
    arr, _ = standardize(as_values(X))
    n, d = arr.shape
    G = arr.T @ arr / n
    lam_arr = np.array([lam], dtype=float)
    pairs = set()
    for j in range(d):
        weights = randomized_weights(d, weakness, rng)
        coefs, sweeps = cd_path(G, np.ascontiguousarray(G[:, j]), weights,
                                lam_arr, j, CD_TOL, CD_MAX_SWEEPS)
        if sweeps[0] >= CD_MAX_SWEEPS:
            raise RuntimeError("coordinate descent did not converge")
        for a in np.flatnonzero(coefs[:, 0]):
            pairs.add((min(a, j), max(a, j)))
    return EdgeSet.from_pairs(d, pairs)


def _resample_edges(arr: np.ndarray, lams_desc: np.ndarray, plan: ResamplePlan,
                    b: int) -> tuple[List[np.ndarray], int]:
    """Selected edge rows per penalty (ascending grid order) for resample b."""
    n, d = arr.shape
    rows = plan.rows_for(n, b)
    Z, n_const = standardize(arr[rows])
    G = Z.T @ Z / len(rows)
    K = lams_desc.size
    per_lam = [[] for _ in range(K)]
    for j in range(d):
        rng = np.random.default_rng([plan.seed, b, j])
        weights = randomized_weights(d, plan.weakness, rng)
        coefs, sweeps = cd_path(G, np.ascontiguousarray(G[:, j]), weights,
                                lams_desc, j, CD_TOL, CD_MAX_SWEEPS)
        if (sweeps >= CD_MAX_SWEEPS).any():
            raise RuntimeError(f"coordinate descent did not converge in resample {b}")
        for k in range(K):
            active = np.flatnonzero(coefs[:, k])
            if active.size:
                lo = np.minimum(active, j)
                hi = np.maximum(active, j)
                per_lam[k].append(pair_index(lo, hi, d))
    merged = []
    for k in reversed(range(K)):  # back to ascending penalty order
        if per_lam[k]:
            merged.append(np.unique(np.concatenate(per_lam[k])))
        else:
            merged.append(np.empty(0, dtype=np.int64))
    return merged, n_const


def compute_counts(X, lambdas, plan: ResamplePlan, n_jobs: int = 1,
                   keep_selections: bool = False) -> CountMatrix:
    """Edge-presence counts across B resamples and the penalty grid.

    For each resample, rows are drawn per the plan, columns re-standardized,
    and every node is lasso-regressed on the rest with fresh randomized
    penalty weights, warm-starting along the grid from large to small
    penalties. Counts are deterministic given plan.seed for any n_jobs.
    """
    arr = as_values(X)
    n, d = arr.shape
    if n < 10:
        raise ValueError("need at least 10 observations")
    if d < 2:
        raise ValueError("need at least 2 variables")
    grid = check_grid(lambdas)
    if plan.kind == "subsample":
        m = plan.subsample_size if plan.subsample_size is not None else n // 2
        if not 2 <= m < n:
            raise ValueError("subsample_size must be in [2, n)")
    lams_desc = grid[::-1].copy()
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_resample_edges)(arr, lams_desc, plan, b) for b in range(plan.B))
    p = d * (d - 1) // 2
    counts = np.zeros((p, grid.size), dtype=np.int32)
    n_const_total = 0
    selections: List[List[np.ndarray]] = []
    for per_lam, n_const in results:
        n_const_total += n_const
        for k, idx in enumerate(per_lam):
            counts[idx, k] += 1
        if keep_selections:
            selections.append(per_lam)
    if n_const_total:
        logger.warning("%d constant column(s) dropped across resamples", n_const_total)
    return CountMatrix(counts=counts, lambdas=grid, B=plan.B, d=d, n=n, plan=plan,
                       per_resample=selections if keep_selections else None)


def counts_from_selections(selections: List[List[np.ndarray]], lambdas, d: int,
                           n: int, plan: ResamplePlan) -> CountMatrix:
    """Rebuild a CountMatrix from per-resample selections (e.g. a subsample of them)."""
    grid = check_grid(lambdas)
    p = d * (d - 1) // 2
    counts = np.zeros((p, grid.size), dtype=np.int32)
    for per_lam in selections:
        for k, idx in enumerate(per_lam):
            counts[idx, k] += 1
    B = len(selections)
    plan = ResamplePlan(kind=plan.kind, B=B, subsample_size=plan.subsample_size,
                        weakness=plan.weakness, seed=plan.seed)
    return CountMatrix(counts=counts, lambdas=grid, B=B, d=d, n=n, plan=plan)
