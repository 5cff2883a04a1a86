"""Stability-selection comparator: the error bound and the window/threshold search."""
import numpy as np
import pytest

from ropenet.counts import CountMatrix, ResamplePlan
from ropenet.stability import StabSelConfig, stabsel_bound, stabsel_select


def matrix_from_counts(counts, B, d, lambdas=None):
    counts = np.asarray(counts, dtype=np.int32)
    K = counts.shape[1]
    lambdas = np.linspace(0.1, 0.1 * K, K) if lambdas is None else lambdas
    plan = ResamplePlan(kind="subsample", B=B, seed=0)
    return CountMatrix(counts=counts, lambdas=lambdas, B=B, d=d, n=50, plan=plan)


class TestBound:
    def test_worked_example(self):
        # 10 edges selected per penalty on average, threshold 0.9 B, 1000 edges
        assert abs(stabsel_bound(10.0, 90, 100, 1000) - 0.125) < 1e-12

    def test_zero_selection_rate(self):
        assert stabsel_bound(0.0, 80, 100, 500) == 0.0

    def test_threshold_must_exceed_half(self):
        with pytest.raises(ValueError):
            stabsel_bound(5.0, 50, 100, 500)
        stabsel_bound(5.0, 100, 100, 500)

    def test_positive_p_required(self):
        with pytest.raises(ValueError):
            stabsel_bound(5.0, 80, 100, 0)


class TestSelect:
    def test_all_zero_counts_select_nothing(self):
        W = matrix_from_counts(np.zeros((45, 2)), B=10, d=10)
        edges, t, window, bound = stabsel_select(W)
        assert len(edges) == 0 and t == 0 and window == (-1, -1)
        assert bound == float("inf")

    def test_single_column_exact_bound(self):
        counts = np.zeros((45, 1))
        counts[:3, 0] = 10
        W = matrix_from_counts(counts, B=10, d=10)
        edges, t, window, bound_each = stabsel_select(W, StabSelConfig(target=0.1))
        assert len(edges) == 3 and t == 9 and window == (0, 0)
        # q_avg = 3, so the bound is 9 / ((2*9/10 - 1) * 45) per the formula
        assert abs(bound_each - stabsel_bound(3.0, 9, 10, 45) / 3) < 1e-12

    def test_tie_prefers_larger_threshold(self):
        counts = np.zeros((45, 1))
        counts[:3, 0] = 10
        W = matrix_from_counts(counts, B=10, d=10)
        edges, t, _, _ = stabsel_select(W, StabSelConfig(target=1.0))
        assert len(edges) == 3 and t == 9

    def test_noisy_column_dropped_from_window(self):
        counts = np.zeros((45, 2))
        counts[:3, :] = 10
        counts[3:23, 0] = 9  # noise inflates column 0's selection rate
        W = matrix_from_counts(counts, B=10, d=10)
        edges, t, window, _ = stabsel_select(W, StabSelConfig(target=0.1))
        assert window == (1, 1) and len(edges) == 3 and t == 9

    def test_selection_grows_with_target(self):
        counts = np.zeros((1225, 1))
        counts[:12, 0] = 100
        counts[12:20, 0] = 95
        W = matrix_from_counts(counts, B=100, d=50)
        sizes = [len(stabsel_select(W, StabSelConfig(target=x))[0])
                 for x in (0.01, 0.02, 0.03, 1.0)]
        assert sizes == sorted(sizes)
        assert sizes[0] == 0 and sizes[-1] == 20

    def test_min_threshold_respected(self):
        counts = np.zeros((45, 1))
        counts[:3, 0] = 8
        W = matrix_from_counts(counts, B=10, d=10)
        edges, t, _, _ = stabsel_select(W, StabSelConfig(target=1.0))
        assert t == 7 and len(edges) == 3
        edges, t, _, _ = stabsel_select(
            W, StabSelConfig(target=1.0, min_threshold=8))
        assert len(edges) == 0 and t == 0

    def test_config_validated(self):
        with pytest.raises(ValueError):
            StabSelConfig(target=0.0)
