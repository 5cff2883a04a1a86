"""The cross-penalty joint procedure: separation curve, CI-based penalty choice,
the pi-star constraint, FDR estimates and per-edge q-values."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .counts import CountMatrix, index_pairs
from .graphs import EdgeSet
from .mixture import (CountHistogram, LambdaFit, NotFittableError, component_pmfs,
                      fit_lambda, is_u_shaped, separation_value)

logger = logging.getLogger(__name__)

Z_UPPER = 1.959964  # two-sided 0.95 normal quantile

_BOOT_STREAM = 271828  # tag separating bootstrap-weight RNG streams from others


@dataclass
class RopeConfig:
    """Settings for the joint procedure."""

    level: float = 0.95
    n_boot: int = 100
    seed: int = 0
    inflation_fraction: float = 0.75
    n_restarts: int = 8
    reuse_first_pass_ci: bool = False

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.n_boot < 2:
            raise ValueError("n_boot must be at least 2")


@dataclass
class RopeResult:
    """Joint-procedure output: per-penalty fits, the chosen penalties, and q-values."""

    lambdas: np.ndarray
    fits: List[Optional[LambdaFit]]
    constrained_fits: List[Optional[LambdaFit]]
    lambda_a: float
    lambda_b: float
    pi_star: float
    final_fit: LambdaFit
    q_curve: np.ndarray
    W: CountMatrix = field(repr=False)

    @property
    def lambda_b_index(self) -> int:
        return int(np.flatnonzero(self.lambdas == self.lambda_b)[0])

    def counts_at_lambda_b(self) -> np.ndarray:
        return self.W.column(self.lambda_b_index)

    @property
    def qvalues(self) -> Dict[Tuple[int, int], float]:
        """q-value per edge selected at least once at lambda_b."""
        counts = self.counts_at_lambda_b()
        rows = np.flatnonzero(counts)
        pairs = index_pairs(rows, self.W.d)
        return {(int(i), int(j)): float(self.q_curve[counts[r]])
                for (i, j), r in zip(pairs, rows)}


def separation(fit: LambdaFit, p: int) -> float:
    """Model-based net count of separable edges at this fit."""
    if fit.B is None:
        raise ValueError("fit does not record B")
    return separation_value(fit.params, fit.B, p)


def fdr_at_threshold(fit: LambdaFit, h: CountHistogram, t: int) -> float:
    """Estimated FDR of selecting all edges with count >= t, clamped to [0, 1]."""
    if not 0 <= t <= h.B:
        raise ValueError("t must be in [0, B]")
    tail = int(h.bins[t:].sum())
    if tail == 0:
        raise ValueError("no observed counts at or above t")
    f1, _ = component_pmfs(fit.params, h.B)
    num = h.p * (1 - fit.params.pi) * f1[t:].sum()
    return float(min(1.0, max(0.0, num / tail)))


def q_curve(fit: LambdaFit, h: CountHistogram) -> np.ndarray:
    """Upper-confidence q-value for each possible count w in {0..B}.

    q(w) is the running minimum over thresholds t <= w of the upper 0.95
    normal-approximation bound on the estimated FDR at t; thresholds beyond
    the last observed count inherit the nearest defined bound.
    """
    B = h.B
    f1, _ = component_pmfs(fit.params, B)
    tails = np.cumsum(h.bins[::-1])[::-1]
    null_tails = np.cumsum(f1[::-1])[::-1]
    bounds = np.empty(B + 1)
    last = 1.0
    for t in range(B + 1):
        if tails[t] > 0:
            fdr = h.p * (1 - fit.params.pi) * null_tails[t] / tails[t]
            fdr = min(1.0, max(0.0, fdr))
            last = min(1.0, fdr + Z_UPPER * np.sqrt(fdr * (1 - fdr) / tails[t]))
        bounds[t] = last
    return np.minimum.accumulate(bounds)


def qvalue(fit: LambdaFit, h: CountHistogram, w: int) -> float:
    """q-value of an edge with selection count w."""
    if not 0 <= w <= h.B:
        raise ValueError("w must be in [0, B]")
    return float(q_curve(fit, h)[w])


def _bootstrap_weights(p: int, seed: int, r: int) -> np.ndarray:
    """Multiplicities of each edge row in bootstrap replicate r."""
    rng = np.random.default_rng([seed, _BOOT_STREAM, r])
    return np.bincount(rng.integers(0, p, size=p), minlength=p)


def argmax_ci(W: CountMatrix, level: float = 0.95, n_boot: int = 100,
              pi_max: Optional[float] = None, *, seed: int = 0,
              fits: Optional[List[LambdaFit]] = None,
              fraction: float = 0.75) -> tuple[float, float, np.ndarray]:
    """Bootstrap confidence interval for the separation-maximizing penalty.

    Edge rows of W are resampled with replacement; every U-shaped penalty is
    refit per replicate (warm-started from the point fits, under pi <= pi_max
    when given) and the argmax of the separation curve recorded. Returns
    (lambda_lo, lambda_hi, g_curve) where the interval ends are empirical
    order-statistic quantiles of the argmax locations and g_curve holds the
    point-fit separations.
    """
    if fits is None:
        fits = []
        for k, lam in enumerate(W.lambdas):
            h = W.histogram(k)
            if not is_u_shaped(h, fraction):
                continue
            try:
                fits.append(fit_lambda(h, pi_max=pi_max, lam=float(lam),
                                       fraction=fraction))
            except NotFittableError:
                continue
    if len(fits) < 2:
        raise ValueError("need at least 2 U-shaped penalties for a confidence interval")
    lams = np.array([f.lam for f in fits])
    cols = {float(lam): k for k, lam in enumerate(W.lambdas)}
    g_point = np.array([f.separation for f in fits])

    argmaxes = []
    for r in range(n_boot):
        weights = _bootstrap_weights(W.p, seed, r)
        best_lam, best_g = None, -np.inf
        for fit in fits:
            k = cols[float(fit.lam)]
            bins = np.bincount(W.column(k), weights=weights,
                               minlength=W.B + 1).astype(np.int64)
            h = CountHistogram(B=W.B, bins=bins, p=int(bins.sum()))
            try:
                refit = fit_lambda(h, pi_max=pi_max, lam=fit.lam, n_restarts=1,
                                   warm_start=fit.u_opt, require_u_shape=False,
                                   fraction=fraction, polish=False)
            except (NotFittableError, ValueError):
                continue
            if refit.separation > best_g:
                best_g, best_lam = refit.separation, fit.lam
        if best_lam is not None:
            argmaxes.append(best_lam)
    if not argmaxes:
        raise RuntimeError("all bootstrap replicates failed to fit")
    arr = np.array(argmaxes)
    alpha = (1 - level) / 2
    lo = float(np.quantile(arr, alpha, method="lower"))
    hi = float(np.quantile(arr, 1 - alpha, method="higher"))
    return lo, hi, g_point


def _point_fits(W: CountMatrix, config: RopeConfig,
                pi_max: Optional[float] = None,
                warm: Optional[List[Optional[LambdaFit]]] = None
                ) -> List[Optional[LambdaFit]]:
    """Fit every U-shaped penalty column; None where not fittable."""
    fits: List[Optional[LambdaFit]] = []
    for k, lam in enumerate(W.lambdas):
        h = W.histogram(k)
        if not is_u_shaped(h, config.inflation_fraction):
            fits.append(None)
            continue
        warm_u = None
        if warm is not None and warm[k] is not None:
            warm_u = warm[k].u_opt
        # A constrained refit of an existing fit is a local update: restarts
        # from scratch can hop to a different likelihood basin with a wildly
        # different FDR curve even when the window objective barely moves.
        restarts = 1 if (pi_max is not None and warm_u is not None) \
            else config.n_restarts
        try:
            fits.append(fit_lambda(h, pi_max=pi_max, lam=float(lam),
                                   n_restarts=restarts,
                                   warm_start=warm_u,
                                   fraction=config.inflation_fraction))
        except NotFittableError:
            fits.append(None)
    return fits


def run_rope(W: CountMatrix, config: Optional[RopeConfig] = None) -> RopeResult:
    """The full joint procedure over a count matrix.

    First pass fits every U-shaped penalty; lambda_a is the upper CI end for
    the separation argmax and pi_star the first-pass pi there. All penalties
    are then refit under pi <= pi_star; lambda_b is the lower CI end over the
    constrained fits, whose fit at lambda_b assigns the q-values.
    """
    config = config or RopeConfig()
    fits = _point_fits(W, config)
    fitted = [f for f in fits if f is not None]
    if not fitted:
        raise NotFittableError(
            "no selection made: the selection count histograms are not U-shaped")

    if len(fitted) >= 2:
        lo1, hi1, _ = argmax_ci(W, config.level, config.n_boot, None,
                                seed=config.seed, fits=fitted,
                                fraction=config.inflation_fraction)
    else:
        lo1 = hi1 = float(fitted[0].lam)
    lambda_a = hi1
    at_a = [f for f in fitted if f.lam == lambda_a]
    if at_a:
        pi_star = at_a[0].params.pi
    else:
        in_ci = [f.params.pi for f in fitted if lo1 <= f.lam <= hi1]
        pi_star = max(in_ci) if in_ci else max(f.params.pi for f in fitted)

    constrained = _point_fits(W, config, pi_max=pi_star, warm=fits)
    con_fitted = [f for f in constrained if f is not None]
    if not con_fitted:
        raise NotFittableError("no penalty could be refit under the pi constraint")

    if config.reuse_first_pass_ci:
        lo2 = lo1
    elif len(con_fitted) >= 2:
        lo2, _, _ = argmax_ci(W, config.level, config.n_boot, pi_star,
                              seed=config.seed, fits=con_fitted,
                              fraction=config.inflation_fraction)
    else:
        lo2 = float(con_fitted[0].lam)
    lambda_b = lo2
    final_candidates = [f for f in con_fitted if f.lam == lambda_b]
    final_fit = final_candidates[0]

    k_b = int(np.flatnonzero(W.lambdas == lambda_b)[0])
    qc = q_curve(final_fit, W.histogram(k_b))
    return RopeResult(lambdas=W.lambdas, fits=fits, constrained_fits=constrained,
                      lambda_a=float(lambda_a), lambda_b=float(lambda_b),
                      pi_star=float(pi_star), final_fit=final_fit, q_curve=qc, W=W)


def select_edges(result: RopeResult, target_fdr: float) -> EdgeSet:
    """Edges whose q-value at lambda_b is below the target FDR."""
    if not 0 < target_fdr <= 1:
        raise ValueError("target_fdr must be in (0, 1]")
    counts = result.counts_at_lambda_b()
    rows = np.flatnonzero(result.q_curve[counts] < target_fdr)
    pairs = index_pairs(rows, result.W.d)
    return EdgeSet.from_pairs(result.W.d, map(tuple, pairs))
