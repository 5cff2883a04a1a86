"""Topology generation, covariance construction, and sampling."""
import numpy as np
import pytest

from ropenet.graphs import (SIGNALS, STRONG_SIGNAL, WEAK_SIGNAL, DataMatrix,
                            EdgeSet, build_covariance, gen_topology,
                            sample_gaussian)


class TestEdgeSet:
    def test_pairs_are_normalized(self):
        es = EdgeSet.from_pairs(5, [(3, 1), (0, 4)])
        assert (1, 3) in es and (3, 1) in es
        assert es.to_array().tolist() == [[0, 4], [1, 3]]

    def test_rejects_self_loops(self):
        with pytest.raises(ValueError):
            EdgeSet.from_pairs(4, [(2, 2)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            EdgeSet.from_pairs(4, [(0, 4)])

    def test_max_edges(self):
        assert EdgeSet(10, frozenset()).max_edges == 45


class TestChain:
    def test_is_a_path(self):
        es = gen_topology("chain", 50, seed=1)
        assert len(es) == 49
        assert all((i, i + 1) in es for i in range(49))


class TestScaleFree:
    def test_default_edge_count(self):
        es = gen_topology("scale_free", 100, seed=0)
        assert len(es) == 99

    @pytest.mark.parametrize("target", [49, 495, 990])
    def test_hits_target_edges(self, target):
        es = gen_topology("scale_free", 500, target_edges=target, seed=3)
        assert len(es) == target

    def test_rejects_bad_targets(self):
        with pytest.raises(ValueError):
            gen_topology("scale_free", 10, target_edges=0, seed=0)
        with pytest.raises(ValueError):
            gen_topology("scale_free", 10, target_edges=46, seed=0)

    def test_deterministic(self):
        a = gen_topology("scale_free", 80, seed=11)
        b = gen_topology("scale_free", 80, seed=11)
        assert a == b

    def test_heavy_tailed_degrees(self):
        es = gen_topology("scale_free", 300, seed=2)
        deg = np.zeros(300, dtype=int)
        for i, j in es.edges:
            deg[i] += 1
            deg[j] += 1
        assert deg.max() >= 10


class TestHubby:
    def test_reference_scale_degrees(self):
        es = gen_topology("hubby", 500, seed=4)
        deg = np.zeros(500, dtype=int)
        for i, j in es.edges:
            deg[i] += 1
            deg[j] += 1
        hubs = np.sort(deg)[-20:]
        assert hubs.min() >= 4
        assert deg.max() == 92

    def test_scaled_down(self):
        es = gen_topology("hubby", 100, seed=4)
        deg = np.zeros(100, dtype=int)
        for i, j in es.edges:
            deg[i] += 1
            deg[j] += 1
        # the hub count scales with n_nodes but the degree range does not
        assert deg.max() == 92

    def test_degree_capped_on_tiny_graphs(self):
        es = gen_topology("hubby", 20, seed=4)
        deg = np.zeros(20, dtype=int)
        for i, j in es.edges:
            deg[i] += 1
            deg[j] += 1
        assert deg.max() <= 19
        assert deg.max() >= 4

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_topology("smallworld", 50, seed=0)


class TestCovariance:
    def test_positive_definite_and_unit_diagonal(self):
        es = gen_topology("scale_free", 120, seed=5)
        cov = build_covariance(es, STRONG_SIGNAL, seed=5)
        eigs = np.linalg.eigvalsh(cov)
        assert eigs.min() > 1e-8
        np.testing.assert_allclose(np.diag(cov), 1.0, atol=1e-12)

    def test_zero_pattern_matches_topology(self):
        es = gen_topology("chain", 30, seed=6)
        cov = build_covariance(es, STRONG_SIGNAL, seed=6)
        for i in range(30):
            for j in range(i + 1, 30):
                if (i, j) in es:
                    assert cov[i, j] != 0
                else:
                    assert cov[i, j] == 0

    def test_signal_levels(self):
        assert STRONG_SIGNAL == (0.32, 0.13)
        assert WEAK_SIGNAL == (0.25, 0.09)
        assert SIGNALS == {"strong": STRONG_SIGNAL, "weak": WEAK_SIGNAL}

    def test_deterministic(self):
        es = gen_topology("scale_free", 60, seed=7)
        a = build_covariance(es, WEAK_SIGNAL, seed=7)
        b = build_covariance(es, WEAK_SIGNAL, seed=7)
        np.testing.assert_array_equal(a, b)


class TestSampling:
    def test_shape_and_determinism(self):
        es = gen_topology("chain", 25, seed=8)
        cov = build_covariance(es, STRONG_SIGNAL, seed=8)
        a = sample_gaussian(cov, 40, seed=8)
        b = sample_gaussian(cov, 40, seed=8)
        assert isinstance(a, DataMatrix)
        assert a.values.shape == (40, 25)
        np.testing.assert_array_equal(a.values, b.values)

    def test_covariance_is_respected(self):
        es = gen_topology("chain", 10, seed=9)
        cov = build_covariance(es, STRONG_SIGNAL, seed=9)
        data = sample_gaussian(cov, 200_000, seed=9)
        emp = np.cov(data.values, rowvar=False)
        np.testing.assert_allclose(emp, cov, atol=0.02)

    def test_rejects_non_pd(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(np.linalg.LinAlgError):
            sample_gaussian(bad, 10, seed=0)
