"""Selection-quality metrics: confusion rates, the modified F1 score, and
Fleiss' kappa agreement across repeated selections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .graphs import EdgeSet


@dataclass(frozen=True)
class SelectionOutcome:
    """A selection together with its evaluation against a known truth."""

    selected: EdgeSet
    truth: Optional[EdgeSet] = None
    fdr: Optional[float] = None
    tpr: Optional[float] = None

    def __post_init__(self):
        for name in ("fdr", "tpr"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= 1:
                raise ValueError(f"{name} must be in [0, 1]")

    @classmethod
    def evaluate(cls, selected: EdgeSet, truth: EdgeSet) -> "SelectionOutcome":
        fdr, tpr = confusion(selected, truth)
        return cls(selected=selected, truth=truth, fdr=fdr, tpr=tpr)


def confusion(selected: EdgeSet, truth: EdgeSet) -> Tuple[float, float]:
    """Achieved false discovery rate and true positive rate of a selection.

    An empty selection has FDR 0 by convention; an empty truth set is an
    error since TPR is undefined.
    """
    if selected.n_nodes != truth.n_nodes:
        raise ValueError("edge sets are over different node sets")
    if len(truth) == 0:
        raise ValueError("truth set is empty; TPR undefined")
    n_sel = len(selected)
    hits = len(selected.edges & truth.edges)
    fdr = 0.0 if n_sel == 0 else (n_sel - hits) / n_sel
    tpr = hits / len(truth)
    return fdr, tpr


def modified_f1(fdr: float, tpr: float, target_fdr: float) -> float:
    """F1-style score with precision 1 - fdr, penalized for exceeding the target.

    The usual F1 denominator term for precision is replaced by
    fdr/target_fdr - target_fdr once fdr exceeds the target, which makes the
    score strictly decreasing in fdr above the target.
    """
    if not 0 <= fdr <= 1 or not 0 <= tpr <= 1:
        raise ValueError("fdr and tpr must be in [0, 1]")
    if not 0 < target_fdr < 1:
        raise ValueError("target_fdr must be in (0, 1)")
    if fdr <= target_fdr:
        m = 1 - fdr
    else:
        m = fdr / target_fdr - target_fdr
    denom = m + tpr
    if denom == 0:
        return 0.0
    return 2 * (1 - fdr) * tpr / denom


def fleiss_kappa_table(table: np.ndarray) -> float:
    """Fleiss' kappa from an items-by-categories table of rating counts.

    Every row must sum to the same number of raters m >= 2. When expected
    agreement equals 1 (all ratings in a single category) the observed
    agreement is necessarily 1 too and the limit value 1 is returned;
    a sub-unit observed agreement there is a contradiction and raises.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 2:
        raise ValueError("table must be items x categories with >= 2 categories")
    if np.any(table < 0):
        raise ValueError("counts must be non-negative")
    row_sums = table.sum(axis=1)
    m = row_sums[0]
    if m < 2 or not np.all(row_sums == m):
        raise ValueError("every item needs the same number of raters, >= 2")
    n_items = table.shape[0]
    p_cat = table.sum(axis=0) / (n_items * m)
    p_item = ((table ** 2).sum(axis=1) - m) / (m * (m - 1))
    p_bar = p_item.mean()
    p_e = float((p_cat ** 2).sum())
    if p_e >= 1.0:
        if np.isclose(p_bar, 1.0):
            return 1.0
        raise ValueError("kappa undefined: expected agreement is 1")
    return float((p_bar - p_e) / (1 - p_e))


def fleiss_kappa(selections: np.ndarray) -> float:
    """Fleiss' kappa for binary selections, raters (rows) by items (columns).

    Categories are selected / not selected. Unanimous single-category input
    (for instance every rater leaving every item unselected) returns the
    perfect-agreement limit 1; downstream reporting decides whether such a
    degenerate agreement is meaningful.
    """
    sel = np.asarray(selections)
    if sel.ndim != 2 or sel.shape[0] < 2 or sel.shape[1] < 1:
        raise ValueError("selections must be a raters x items matrix, >= 2 raters")
    if not np.isin(sel, (0, 1)).all():
        raise ValueError("selections must be binary")
    m = sel.shape[0]
    ones = sel.sum(axis=0)
    table = np.column_stack([m - ones, ones])
    return fleiss_kappa_table(table)
