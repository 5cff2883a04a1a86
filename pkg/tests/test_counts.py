"""Penalty grids, resampling plans, the lasso solver, and count computation."""
import numpy as np
import pytest

from ropenet.counts import (CountMatrix, ResamplePlan, compute_counts,
                            counts_from_selections, index_pairs, lasso_fit,
                            make_grid, neighborhood_edges, pair_index,
                            randomized_weights, standardize)
from ropenet.graphs import (STRONG_SIGNAL, build_covariance, gen_topology,
                            sample_gaussian)

KKT_TOL = 1e-6


def _sim(d=25, n=120, seed=0):
    es = gen_topology("chain", d, seed=seed)
    cov = build_covariance(es, STRONG_SIGNAL, seed=seed)
    return sample_gaussian(cov, n, seed=seed).values


class TestGrid:
    def test_linear_endpoints(self):
        g = make_grid(0.02, 0.3, 10)
        assert g[0] == 0.02 and g[-1] == 0.3 and len(g) == 10
        np.testing.assert_allclose(np.diff(g), np.diff(g)[0])

    def test_invalid(self):
        with pytest.raises(ValueError):
            make_grid(0.3, 0.02, 10)
        with pytest.raises(ValueError):
            make_grid(0.0, 0.3, 10)


class TestPairIndexing:
    def test_round_trip(self):
        d = 17
        p = d * (d - 1) // 2
        pairs = index_pairs(np.arange(p), d)
        back = pair_index(pairs[:, 0], pairs[:, 1], d)
        np.testing.assert_array_equal(back, np.arange(p))
        assert pair_index(0, 1, d) == 0
        assert pair_index(d - 2, d - 1, d) == p - 1


class TestResamplePlan:
    def test_bootstrap_rows(self):
        plan = ResamplePlan(kind="bootstrap", B=5, seed=3)
        rows = plan.rows_for(50, 2)
        assert rows.shape == (50,)
        assert rows.min() >= 0 and rows.max() < 50
        np.testing.assert_array_equal(rows, plan.rows_for(50, 2))

    def test_subsample_rows(self):
        plan = ResamplePlan(kind="subsample", B=5, seed=3)
        rows = plan.rows_for(51, 0)
        assert rows.shape == (25,)
        assert len(set(rows.tolist())) == 25

    def test_subsample_size_override(self):
        plan = ResamplePlan(kind="subsample", B=5, subsample_size=30, seed=3)
        assert plan.rows_for(50, 1).shape == (30,)

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            ResamplePlan(kind="jackknife", B=5)

    def test_distinct_resamples(self):
        plan = ResamplePlan(kind="bootstrap", B=5, seed=3)
        assert not np.array_equal(plan.rows_for(50, 0), plan.rows_for(50, 1))


class TestRandomizedWeights:
    def test_two_point_support(self, rng):
        w = randomized_weights(500, 0.8, rng)
        assert set(np.unique(w)) == {0.8, 1.0}
        assert abs(w.mean() - 0.9) < 0.02

    def test_weakness_one_degenerate(self, rng):
        assert set(np.unique(randomized_weights(100, 1.0, rng))) == {1.0}

    def test_invalid_weakness(self, rng):
        with pytest.raises(ValueError):
            randomized_weights(10, 0.0, rng)


class TestLasso:
    def test_kkt_conditions(self):
        X, _ = standardize(_sim(seed=1))
        n, d = X.shape
        rng = np.random.default_rng(2)
        weights = randomized_weights(d, 0.8, rng)
        lam = 0.1
        beta = lasso_fit(X, 0, lam, weights)
        assert beta[0] == 0.0
        y = X[:, 0]
        grad = X.T @ (y - X @ beta) / n
        active = np.flatnonzero(beta)
        for k in active:
            assert abs(grad[k] - lam * weights[k] * np.sign(beta[k])) < KKT_TOL
        inactive = [k for k in range(1, d) if beta[k] == 0.0]
        for k in inactive:
            assert abs(grad[k]) <= lam * weights[k] + KKT_TOL

    def test_orthonormal_soft_threshold(self):
        # orthonormal design: solution is soft-thresholding of X^T y / n,
        # and active sets are nested along the path
        rng = np.random.default_rng(4)
        n, d = 400, 8
        M = rng.standard_normal((n, d))
        Q, _ = np.linalg.qr(M)
        X = Q * np.sqrt(n)  # X^T X / n = I
        y_col = X @ np.array([0.9, -0.5, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0])
        X_aug = np.column_stack([y_col + 0.01 * rng.standard_normal(n), X])
        corr = X_aug.T @ (X_aug[:, 0]) / n
        prev_active = None
        for lam in (0.05, 0.2, 0.4, 0.8):
            beta = lasso_fit(X_aug, 0, lam)
            active = set(np.flatnonzero(beta).tolist())
            if prev_active is not None:
                assert active <= prev_active
            prev_active = active
        beta = lasso_fit(X_aug, 0, 0.2)
        for k in range(1, 9):
            gram_kk = (X_aug[:, k] @ X_aug[:, k]) / n
            expect = np.sign(corr[k]) * max(abs(corr[k]) - 0.2, 0.0) / gram_kk
            assert abs(beta[k] - expect) < 1e-5

    def test_large_penalty_empty(self):
        X, _ = standardize(_sim(seed=5))
        beta = lasso_fit(X, 3, 10.0)
        assert not beta.any()

    def test_invalid_args(self):
        X = _sim(seed=6)
        with pytest.raises(ValueError):
            lasso_fit(X, 99, 0.1)
        with pytest.raises(ValueError):
            lasso_fit(X, 0, -1.0)
        with pytest.raises(ValueError):
            lasso_fit(X, 0, 0.1, np.full(X.shape[1], 2.0))


class TestStandardize:
    def test_moments(self):
        Z, n_const = standardize(_sim(seed=7))
        assert n_const == 0
        np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-12)

    def test_constant_column(self):
        arr = np.column_stack([np.ones(30), np.arange(30.0)])
        Z, n_const = standardize(arr)
        assert n_const == 1
        assert not Z[:, 0].any()


class TestNeighborhoodEdges:
    def test_or_rule_union(self):
        X = _sim(d=15, seed=8)
        es = neighborhood_edges(X, 0.15, np.random.default_rng(8))
        assert es.n_nodes == 15
        assert len(es) > 0

    def test_deterministic_given_rng_state(self):
        X = _sim(d=15, seed=8)
        a = neighborhood_edges(X, 0.15, np.random.default_rng(9), weakness=0.8)
        b = neighborhood_edges(X, 0.15, np.random.default_rng(9), weakness=0.8)
        assert a == b


class TestComputeCounts:
    @pytest.fixture(scope="class")
    @staticmethod
    def W():
        X = _sim(d=20, n=80, seed=10)
        plan = ResamplePlan(kind="bootstrap", B=30, weakness=0.8, seed=10)
        return compute_counts(X, make_grid(0.05, 0.3, 4), plan)

    def test_shape_and_range(self, W):
        assert W.counts.shape == (190, 4)
        assert W.counts.min() >= 0 and W.counts.max() <= 30

    def test_histogram_covers_all_edges(self, W):
        h = W.histogram(0)
        assert h.bins.sum() == W.p == 190

    def test_deterministic_across_thread_counts(self):
        X = _sim(d=12, n=60, seed=11)
        plan = ResamplePlan(kind="bootstrap", B=10, weakness=0.8, seed=11)
        grid = make_grid(0.05, 0.3, 3)
        a = compute_counts(X, grid, plan, n_jobs=1)
        b = compute_counts(X, grid, plan, n_jobs=4)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_subsample_plan(self):
        X = _sim(d=12, n=60, seed=12)
        plan = ResamplePlan(kind="subsample", B=10, weakness=0.8, seed=12)
        W = compute_counts(X, make_grid(0.05, 0.3, 3), plan)
        assert W.counts.max() <= 10

    def test_rejects_tiny_input(self):
        plan = ResamplePlan(kind="bootstrap", B=5, seed=0)
        with pytest.raises(ValueError):
            compute_counts(np.zeros((5, 4)), make_grid(0.1, 0.2, 2), plan)

    def test_selections_rebuild_counts(self):
        X = _sim(d=12, n=60, seed=13)
        plan = ResamplePlan(kind="bootstrap", B=8, weakness=0.8, seed=13)
        grid = make_grid(0.05, 0.3, 3)
        W = compute_counts(X, grid, plan, keep_selections=True)
        assert W.per_resample is not None and len(W.per_resample) == 8
        W2 = counts_from_selections(W.per_resample, grid, W.d, W.n, plan)
        np.testing.assert_array_equal(W.counts, W2.counts)

    def test_row_of_matches_pair_index(self, W):
        assert W.row_of(2, 5) == pair_index(2, 5, W.d)
        with pytest.raises(ValueError):
            W.row_of(5, 2)


class TestCountMatrixValidation:
    def test_shape_checked(self):
        plan = ResamplePlan(kind="bootstrap", B=5, seed=0)
        with pytest.raises(ValueError):
            CountMatrix(counts=np.zeros((3, 2), dtype=np.int32),
                        lambdas=np.array([0.1, 0.2]), B=5, d=4, n=50, plan=plan)

    def test_counts_bounded_by_B(self):
        plan = ResamplePlan(kind="bootstrap", B=5, seed=0)
        counts = np.full((6, 1), 9, dtype=np.int32)
        with pytest.raises(ValueError):
            CountMatrix(counts=counts, lambdas=np.array([0.1]), B=5, d=4,
                        n=50, plan=plan)
