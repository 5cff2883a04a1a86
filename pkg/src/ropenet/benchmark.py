"""Method comparison harness: simulate, select with both methods, score, and
measure selection agreement across model subsamples."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .counts import (CountMatrix, ResamplePlan, compute_counts,
                     counts_from_selections, make_grid, pair_index)
from .graphs import (SIGNALS, TOPOLOGIES, EdgeSet, build_covariance,
                     gen_topology, sample_gaussian)
from .metrics import confusion, fleiss_kappa, modified_f1
from .mixture import NotFittableError
from .pipeline import RopeConfig, run_rope, select_edges
from .stability import StabSelConfig, stabsel_select

logger = logging.getLogger(__name__)

_SUBSAMPLE_STREAM = 314159  # RNG stream tag for model subsampling

REPORT_COLUMNS = ("method", "topology", "signal", "n", "B", "steps", "weakness",
                  "target_fdr", "replicate", "achieved_fdr", "tpr", "f1m",
                  "n_selected")
KAPPA_COLUMNS = ("method", "target_fdr", "kappa", "n_subsamples")


@dataclass(frozen=True)
class ComparisonScenario:
    """One simulation setting, rerun over independent replicates."""

    topology: str = "scale_free"
    signal: str = "strong"
    d: int = 100
    n: int = 200
    target_edges: Optional[int] = None
    B: int = 500
    steps: int = 15
    lambda_min: float = 0.02
    lambda_max: float = 0.3
    weakness: float = 0.8
    resample: str = "bootstrap"
    targets: Tuple[float, ...] = (0.05, 0.1, 0.15)
    n_replicates: int = 20
    seed: int = 0
    n_boot: int = 100
    n_restarts: int = 8
    n_jobs: int = 1
    # None shares the count matrix between methods; a plan reruns the
    # resampling separately for stability selection.
    stabsel_plan: Optional[ResamplePlan] = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.signal not in SIGNALS:
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.n_replicates < 0:
            raise ValueError("n_replicates must be non-negative")
        if not all(0 < t <= 1 for t in self.targets):
            raise ValueError("targets must be in (0, 1]")


def _replicate_seeds(seed: int, replicate: int, n_streams: int = 5) -> List[int]:
    ss = np.random.SeedSequence([seed, replicate])
    return [int(c.generate_state(1, np.uint32)[0]) for c in ss.spawn(n_streams)]


def simulate_counts(scenario: ComparisonScenario, replicate: int
                    ) -> Tuple[EdgeSet, CountMatrix]:
    """Truth network and count matrix for one replicate of a scenario."""
    s_topo, s_cov, s_data, s_counts, _ = _replicate_seeds(scenario.seed, replicate)
    truth = gen_topology(scenario.topology, scenario.d,
                         target_edges=scenario.target_edges, seed=s_topo)
    cov = build_covariance(truth, SIGNALS[scenario.signal], seed=s_cov)
    data = sample_gaussian(cov, scenario.n, seed=s_data)
    plan = ResamplePlan(kind=scenario.resample, B=scenario.B,
                        weakness=scenario.weakness, seed=s_counts)
    lambdas = make_grid(scenario.lambda_min, scenario.lambda_max, scenario.steps)
    W = compute_counts(data.values, lambdas, plan, n_jobs=scenario.n_jobs)
    return truth, W


def _rope_selections(W: CountMatrix, targets: Sequence[float],
                     config: RopeConfig) -> Dict[float, EdgeSet]:
    """Edge selection per target; empty selections when no histogram is U-shaped."""
    try:
        result = run_rope(W, config)
    except NotFittableError as exc:
        logger.info("no selection: %s", exc)
        empty = EdgeSet(W.d, frozenset())
        return {t: empty for t in targets}
    return {t: select_edges(result, t) for t in targets}


def run_comparison(scenario: ComparisonScenario) -> List[dict]:
    """Score both methods per replicate and target; rows match REPORT_COLUMNS."""
    rows: List[dict] = []
    for r in range(scenario.n_replicates):
        truth, W = simulate_counts(scenario, r)
        _, s_cov, s_data, s_stab, s_rope = _replicate_seeds(scenario.seed, r)
        rope_cfg = RopeConfig(n_boot=scenario.n_boot, seed=s_rope,
                              n_restarts=scenario.n_restarts)
        rope_sel = _rope_selections(W, scenario.targets, rope_cfg)
        if scenario.stabsel_plan is None:
            W_stab = W
        else:
            plan = replace(scenario.stabsel_plan, seed=s_stab)
            cov = build_covariance(truth, SIGNALS[scenario.signal], seed=s_cov)
            data = sample_gaussian(cov, scenario.n, seed=s_data)
            W_stab = compute_counts(data.values, np.asarray(W.lambdas), plan,
                                    n_jobs=scenario.n_jobs)
        for target in scenario.targets:
            stab_sel, _, _, _ = stabsel_select(W_stab, StabSelConfig(target=target))
            for method, selected in (("rope", rope_sel[target]),
                                     ("stabsel", stab_sel)):
                fdr, tpr = confusion(selected, truth)
                rows.append({
                    "method": method, "topology": scenario.topology,
                    "signal": scenario.signal, "n": scenario.n, "B": scenario.B,
                    "steps": scenario.steps, "weakness": scenario.weakness,
                    "target_fdr": target, "replicate": r, "achieved_fdr": fdr,
                    "tpr": tpr, "f1m": modified_f1(fdr, tpr, target),
                    "n_selected": len(selected),
                })
    return rows


def kappa_analysis(W: CountMatrix, targets: Sequence[float],
                   n_subsamples: int = 20, subsample_size: Optional[int] = None,
                   seed: int = 0, rope_config: Optional[RopeConfig] = None
                   ) -> List[dict]:
    """Selection agreement across subsamples of the resampled models.

    The per-resample selections stored in W are subsampled without
    replacement n_subsamples times (default size 0.8 B); each subsample's
    counts are rebuilt and both methods rerun. Fleiss' kappa is computed per
    method and target over all potential edges; a method whose subsample
    selections are all empty gets kappa None (undefined). Rows match
    KAPPA_COLUMNS.
    """
    if W.per_resample is None:
        raise ValueError("count matrix lacks per-resample selections; "
                         "recompute with keep_selections")
    B = W.B
    size = subsample_size if subsample_size is not None else round(0.8 * B)
    if not 2 <= size <= B:
        raise ValueError("subsample size must be in [2, B]")
    if n_subsamples < 2:
        raise ValueError("need at least 2 subsamples")
    rope_config = rope_config or RopeConfig()
    rng = np.random.default_rng([seed, _SUBSAMPLE_STREAM])

    picks: Dict[Tuple[str, float], List[np.ndarray]] = {
        (m, t): [] for m in ("rope", "stabsel") for t in targets}
    for _ in range(n_subsamples):
        idx = rng.choice(B, size=size, replace=False)
        sub = [W.per_resample[i] for i in idx]
        W_s = counts_from_selections(sub, np.asarray(W.lambdas), W.d, W.n, W.plan)
        rope_sel = _rope_selections(W_s, targets, rope_config)
        for t in targets:
            stab_sel, _, _, _ = stabsel_select(W_s, StabSelConfig(target=t))
            for method, sel in (("rope", rope_sel[t]), ("stabsel", stab_sel)):
                vec = np.zeros(W.p, dtype=np.int8)
                for i, j in sel.edges:
                    vec[pair_index(i, j, W.d)] = 1
                picks[(method, t)].append(vec)

    rows: List[dict] = []
    for t in targets:
        for method in ("rope", "stabsel"):
            mat = np.vstack(picks[(method, t)])
            kappa = None if mat.sum() == 0 else float(fleiss_kappa(mat))
            rows.append({"method": method, "target_fdr": t, "kappa": kappa,
                         "n_subsamples": n_subsamples})
    return rows
