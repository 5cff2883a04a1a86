"""Estimator-style wrappers over the functional pipeline, following the
fit/attributes convention so selections drop into existing tooling."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .counts import CountMatrix, ResamplePlan, compute_counts, make_grid, pair_index
from .graphs import EdgeSet
from .mixture import NotFittableError
from .pipeline import RopeConfig, run_rope, select_edges
from .stability import StabSelConfig, stabsel_select


class _CountsMixin:
    """Shared resampled-count computation for the selector estimators."""

    def _counts(self, X) -> CountMatrix:
        X = check_array(X, dtype=np.float64, ensure_min_samples=10,
                        ensure_min_features=2)
        self.n_features_in_ = X.shape[1]
        lambdas = make_grid(self.lambda_min, self.lambda_max, self.steps)
        plan = ResamplePlan(kind=self.resample, B=self.B,
                            subsample_size=self.subsample_size,
                            weakness=self.weakness, seed=self.seed)
        return compute_counts(X, lambdas, plan, n_jobs=self.n_jobs)

    def _finish(self, edges: EdgeSet) -> None:
        self.edges_ = edges
        d = edges.n_nodes
        self.adjacency_ = np.zeros((d, d), dtype=bool)
        for i, j in edges.edges:
            self.adjacency_[i, j] = self.adjacency_[j, i] = True
        p = d * (d - 1) // 2
        self.support_ = np.zeros(p, dtype=bool)
        for i, j in edges.edges:
            self.support_[pair_index(i, j, d)] = True

    def get_support(self, indices: bool = False):
        """Boolean mask over potential edges in pair-index order, or the
        selected (i, j) pairs when indices is true."""
        check_is_fitted(self, "edges_")
        if indices:
            return np.array(sorted(self.edges_.edges), dtype=int).reshape(-1, 2)
        return self.support_


class RopeSelector(_CountsMixin, BaseEstimator):
    """Network edge selection with resampling counts and FDR control.

    Fits randomized neighborhood regressions over resamples of X, models the
    per-penalty selection-count histograms with a constrained two-component
    mixture, picks the working penalty through the bootstrap confidence
    procedure, and keeps edges whose q-value is below target_fdr.

    Parameters
    ----------
    target_fdr : float
        Selection keeps edges with q-value strictly below this.
    lambda_min, lambda_max, steps : grid of penalty levels.
    B : int
        Number of resamples.
    resample : {"bootstrap", "subsample"}
    subsample_size : int or None
        Rows per subsample (defaults to half the observations).
    weakness : float
        Lower bound of the randomized penalty weights.
    level : float
        Confidence level of the penalty-location intervals.
    n_boot : int
        Bootstrap replicates for those intervals.
    n_restarts : int
        Optimizer restarts per histogram fit.
    on_no_fit : {"empty", "raise"}
        Whether a data set with no usable count histogram yields an empty
        selection or an error.
    seed : int
    n_jobs : int

    Attributes
    ----------
    counts_ : CountMatrix
    result_ : RopeResult or None when no histogram was usable.
    edges_ : EdgeSet of the selection.
    support_ : boolean mask over pair indices.
    adjacency_ : symmetric boolean matrix of the selection.
    """

    def __init__(self, target_fdr: float = 0.1, lambda_min: float = 0.02,
                 lambda_max: float = 0.3, steps: int = 15, B: int = 500,
                 resample: str = "bootstrap",
                 subsample_size: Optional[int] = None, weakness: float = 0.8,
                 level: float = 0.95, n_boot: int = 100, n_restarts: int = 8,
                 on_no_fit: str = "empty", seed: int = 0, n_jobs: int = 1):
        self.target_fdr = target_fdr
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        self.steps = steps
        self.B = B
        self.resample = resample
        self.subsample_size = subsample_size
        self.weakness = weakness
        self.level = level
        self.n_boot = n_boot
        self.n_restarts = n_restarts
        self.on_no_fit = on_no_fit
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.on_no_fit not in ("empty", "raise"):
            raise ValueError("on_no_fit must be 'empty' or 'raise'")
        self.counts_ = self._counts(X)
        config = RopeConfig(level=self.level, n_boot=self.n_boot,
                            seed=self.seed, n_restarts=self.n_restarts)
        try:
            self.result_ = run_rope(self.counts_, config)
        except NotFittableError:
            if self.on_no_fit == "raise":
                raise
            self.result_ = None
            self._finish(EdgeSet(self.counts_.d, frozenset()))
            return self
        self._finish(select_edges(self.result_, self.target_fdr))
        return self

    def qvalues(self) -> dict:
        """q-value per edge seen at the working penalty; empty if unfit."""
        check_is_fitted(self, "edges_")
        return {} if self.result_ is None else self.result_.qvalues


class StabilitySelector(_CountsMixin, BaseEstimator):
    """Stability selection over the same resampled counts, for comparison.

    Scans contiguous penalty windows and count thresholds, keeping the
    combination that selects the most edges while the expected-false-
    selection bound stays within target_fdr per selected edge.

    Attributes
    ----------
    counts_ : CountMatrix
    edges_ : EdgeSet (empty when no combination satisfies the bound).
    threshold_ : chosen count threshold (0 when empty).
    window_ : (k_lo, k_hi) penalty-grid indices ((-1, -1) when empty).
    bound_ : bound per selected edge (inf when empty).
    """

    def __init__(self, target_fdr: float = 0.1, lambda_min: float = 0.02,
                 lambda_max: float = 0.3, steps: int = 15, B: int = 500,
                 resample: str = "bootstrap",
                 subsample_size: Optional[int] = None, weakness: float = 0.8,
                 seed: int = 0, n_jobs: int = 1):
        self.target_fdr = target_fdr
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        self.steps = steps
        self.B = B
        self.resample = resample
        self.subsample_size = subsample_size
        self.weakness = weakness
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        self.counts_ = self._counts(X)
        edges, t, window, bound = stabsel_select(
            self.counts_, StabSelConfig(target=self.target_fdr))
        self.threshold_ = t
        self.window_ = window
        self.bound_ = bound
        self._finish(edges)
        return self
