"""Stability selection with an error-bound-driven window and threshold search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .counts import CountMatrix, index_pairs
from .graphs import EdgeSet


@dataclass(frozen=True)
class StabSelConfig:
    """Settings for the comparator: bound target and threshold search range."""

    target: float = 0.05
    min_threshold: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.target <= 1:
            raise ValueError("target must be in (0, 1]")


def stabsel_bound(q_avg: float, threshold: int, B: int, p: int) -> float:
    """Expected number of falsely selected edges for a count threshold.

    q_avg is the average number of edges selected per penalty (summed counts
    divided by B); the bound requires threshold > B/2.
    """
    if not B / 2 < threshold <= B:
        raise ValueError("threshold must be in (B/2, B]")
    if p <= 0:
        raise ValueError("p must be positive")
    return q_avg ** 2 / ((2 * threshold / B - 1) * p)


def stabsel_select(W: CountMatrix, config: Optional[StabSelConfig] = None
                   ) -> Tuple[EdgeSet, int, Tuple[int, int], float]:
    """Pick a penalty window and count threshold maximizing selections under the bound.

    Every contiguous window of the penalty grid is scanned together with every
    threshold t in {floor(B/2)+1, ..., B}. An edge is selected when its largest
    count inside the window exceeds t. A combination is admissible when the
    per-selection error bound is at most the target; among admissible ones the
    most selections win, with ties going to the larger threshold. Returns
    (edges, threshold, (k_lo, k_hi), bound_per_selection); when nothing is
    admissible the edge set is empty, the threshold 0, the window (-1, -1) and
    the bound infinite.
    """
    config = config or StabSelConfig()
    B, p = W.B, W.p
    K = len(W.lambdas)
    t_lo = config.min_threshold if config.min_threshold is not None else B // 2 + 1
    t_lo = max(t_lo, B // 2 + 1)

    counts = W.counts
    best = None  # (n_selected, threshold, k_lo, k_hi, bound_each, rows)
    for k_lo in range(K):
        running = counts[:, k_lo].astype(np.int64)
        total = int(counts[:, k_lo].sum())
        for k_hi in range(k_lo, K):
            if k_hi > k_lo:
                running = np.maximum(running, counts[:, k_hi])
                total += int(counts[:, k_hi].sum())
            q_avg = total / ((k_hi - k_lo + 1) * B)
            for t in range(t_lo, B + 1):
                n_sel = int((running > t).sum())
                if n_sel == 0:
                    continue
                bound = stabsel_bound(q_avg, t, B, p)
                if bound / n_sel > config.target:
                    continue
                key = (n_sel, t)
                if best is None or key > (best[0], best[1]):
                    rows = np.flatnonzero(running > t)
                    best = (n_sel, t, k_lo, k_hi, bound / n_sel, rows)
    if best is None:
        return EdgeSet(W.d, frozenset()), 0, (-1, -1), float("inf")
    n_sel, t, k_lo, k_hi, bound_each, rows = best
    pairs = index_pairs(rows, W.d)
    return (EdgeSet.from_pairs(W.d, map(tuple, pairs)), t, (k_lo, k_hi),
            bound_each)
