"""Resampling-based edge selection for sparse network models with FDR control.

The pipeline: resample the data and run randomized neighborhood regressions
over a penalty grid, count how often each potential edge is selected, model
each penalty's count histogram with a constrained two-component mixture,
choose the working penalty through bootstrap confidence intervals on the
separation curve, and keep edges whose q-value clears the target FDR.
"""

__version__ = "0.1.0"

from .benchmark import ComparisonScenario, kappa_analysis, run_comparison
from .counts import (CountMatrix, ResamplePlan, compute_counts, lasso_fit,
                     make_grid, neighborhood_edges, randomized_weights)
from .estimators import RopeSelector, StabilitySelector
from .graphs import (SIGNALS, STRONG_SIGNAL, TOPOLOGIES, WEAK_SIGNAL,
                     CovarianceMatrix, DataMatrix, EdgeSet, SignalLevel,
                     build_covariance, gen_topology, sample_gaussian)
from .metrics import (SelectionOutcome, confusion, fleiss_kappa,
                      fleiss_kappa_table, modified_f1)
from .mixture import (CountHistogram, LambdaFit, MixtureParams,
                      NotFittableError, beta_binomial_pmf, choose_cutoff,
                      component_pmfs, fit_lambda, is_u_shaped, mixture_pmf)
from .pipeline import (RopeConfig, RopeResult, argmax_ci, fdr_at_threshold,
                       q_curve, qvalue, run_rope, select_edges, separation)
from .stability import StabSelConfig, stabsel_bound, stabsel_select

__all__ = [
    "__version__",
    "ComparisonScenario", "kappa_analysis", "run_comparison",
    "CountMatrix", "ResamplePlan", "compute_counts", "lasso_fit", "make_grid",
    "neighborhood_edges", "randomized_weights",
    "RopeSelector", "StabilitySelector",
    "SIGNALS", "STRONG_SIGNAL", "TOPOLOGIES", "WEAK_SIGNAL",
    "CovarianceMatrix", "DataMatrix", "EdgeSet", "SignalLevel",
    "build_covariance", "gen_topology", "sample_gaussian",
    "SelectionOutcome", "confusion", "fleiss_kappa", "fleiss_kappa_table",
    "modified_f1",
    "CountHistogram", "LambdaFit", "MixtureParams", "NotFittableError",
    "beta_binomial_pmf", "choose_cutoff", "component_pmfs", "fit_lambda",
    "is_u_shaped", "mixture_pmf",
    "RopeConfig", "RopeResult", "argmax_ci", "fdr_at_threshold", "q_curve",
    "qvalue", "run_rope", "select_edges", "separation",
    "StabSelConfig", "stabsel_bound", "stabsel_select",
]
