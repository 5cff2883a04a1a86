"""Shared fixtures. The end-to-end scenario fixture is session-scoped because
three acceptance checks and a bias property all read from the same 10 runs."""
from __future__ import annotations

import time

import numpy as np
import pytest

from ropenet.benchmark import ComparisonScenario, simulate_counts, _replicate_seeds
from ropenet.counts import index_pairs
from ropenet.graphs import EdgeSet
from ropenet.metrics import confusion, modified_f1
from ropenet.pipeline import RopeConfig, q_curve, run_rope, select_edges
from ropenet.stability import StabSelConfig, stabsel_select

E2E_TARGET = 0.1
E2E_SEEDS = 10


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def _single_lambda_fdr(result, W, truth, target):
    """Achieved FDR of selecting from the first-pass fit at the g-maximizing
    penalty, skipping the joint confidence/constraint machinery."""
    fitted = [f for f in result.fits if f is not None]
    best = fitted[0]
    for f in fitted[1:]:
        if f.separation > best.separation:
            best = f
    k = int(np.flatnonzero(W.lambdas == best.lam)[0])
    qc = q_curve(best, W.histogram(k))
    counts = W.column(k)
    rows = np.flatnonzero(qc[counts] < target)
    pairs = index_pairs(rows, W.d)
    selected = EdgeSet.from_pairs(W.d, map(tuple, pairs))
    fdr, _ = confusion(selected, truth)
    return fdr, best


@pytest.fixture(scope="session")
def e2e_runs():
    """Ten desk-scale runs: scale-free d=100, n=200, B=100, 10 penalties.

    Returns per-seed records with both methods' achieved rates plus the
    single-penalty baseline, and the total wall time.
    """
    scenario = ComparisonScenario(topology="scale_free", d=100, n=200, B=100,
                                  steps=10, targets=(E2E_TARGET,),
                                  n_replicates=E2E_SEEDS, seed=0)
    records = []
    t0 = time.time()
    for r in range(E2E_SEEDS):
        truth, W = simulate_counts(scenario, r)
        s_rope = _replicate_seeds(scenario.seed, r)[4]
        result = run_rope(W, RopeConfig(n_boot=scenario.n_boot, seed=s_rope))
        selected = select_edges(result, E2E_TARGET)
        fdr, tpr = confusion(selected, truth)

        fdr_single, best_fit = _single_lambda_fdr(result, W, truth, E2E_TARGET)
        fitted = [f for f in result.fits if f is not None]
        pi_smallest = fitted[0].params.pi
        pi_at_gmax = best_fit.params.pi

        stab_sel, _, _, _ = stabsel_select(W, StabSelConfig(target=E2E_TARGET))
        stab_fdr, stab_tpr = confusion(stab_sel, truth)
        records.append({
            "fdr": fdr, "tpr": tpr,
            "f1m": modified_f1(fdr, tpr, E2E_TARGET),
            "n_selected": len(selected),
            "fdr_single": fdr_single,
            "pi_smallest": pi_smallest, "pi_at_gmax": pi_at_gmax,
            "stab_fdr": stab_fdr, "stab_tpr": stab_tpr,
            "stab_f1m": modified_f1(stab_fdr, stab_tpr, E2E_TARGET),
            "stab_n": len(stab_sel),
        })
    return {"records": records, "elapsed": time.time() - t0}
