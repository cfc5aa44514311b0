import math

import numpy as np
import pytest

from chainscope import (build_model, argmax_distribution, concentration_check,
                        estimate_modulus, estimate_sup, nested_net_experiment,
                        sample_paths, sudakov_bound, supremum_report)
from chainscope.gaussian_lab import (FactorizationError, standard_normal_block,
                                     submodel)

from conftest import random_covariance

# two points at distance 1 realized as correlated unit-variance Gaussians
COV_PAIR_D1 = np.array([[1.0, 0.5], [0.5, 1.0]])


class TestModel:
    def test_psd_uses_zero_jitter(self):
        m = build_model(np.eye(3))
        assert m.jitter == 0.0
        assert np.allclose(m.factor @ m.factor.T, np.eye(3), atol=1e-12)

    def test_rank_deficient_ladder(self):
        C = np.array([[1.0, 1.0], [1.0, 1.0]])
        m = build_model(C)
        assert np.allclose(m.factor @ m.factor.T, C, atol=1e-6)

    def test_not_psd_raises(self):
        from chainscope import MetricValidationError

        with pytest.raises((MetricValidationError, FactorizationError)):
            build_model([[1.0, 3.0], [3.0, 1.0]])

    def test_random_reconstruction(self, session_rng):
        C = random_covariance(session_rng, 10)
        m = build_model(C)
        scale = 1e-6 * (1.0 + np.abs(C).max())
        assert np.abs(m.factor @ m.factor.T - C).max() <= scale


class TestCounterSampling:
    def test_block_splits_agree(self):
        whole = standard_normal_block(5, 0, 100, 7)
        parts = np.vstack([standard_normal_block(5, 0, 37, 7),
                           standard_normal_block(5, 37, 100, 7)])
        assert np.array_equal(whole, parts)

    def test_seeds_differ(self):
        a = standard_normal_block(1, 0, 10, 3)
        b = standard_normal_block(2, 0, 10, 3)
        assert not np.array_equal(a, b)

    def test_marginals_standard_normal(self):
        z = standard_normal_block(11, 0, 200000, 2)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_sample_paths_covariance(self):
        m = build_model(COV_PAIR_D1)
        x = sample_paths(m, 0, 100000, 3)
        emp = np.cov(x.T)
        assert np.abs(emp - COV_PAIR_D1).max() < 0.02


class TestEstimates:
    def test_two_point_esup_closed_form(self):
        m = build_model(COV_PAIR_D1)
        est = estimate_sup(m, 100000, 7)
        expected = 1.0 / math.sqrt(2.0 * math.pi)
        assert abs(est.mean - expected) <= 3.0 * est.stderr

    def test_iid_pair_esup_closed_form(self):
        m = build_model(np.eye(2))
        est = estimate_sup(m, 100000, 7)
        expected = 1.0 / math.sqrt(math.pi)
        assert abs(est.mean - expected) <= 3.0 * est.stderr

    def test_threads_reduction_identical(self):
        m = build_model(random_covariance(np.random.default_rng(0), 8))
        a = estimate_sup(m, 40000, 3, threads=1)
        b = estimate_sup(m, 40000, 3, threads=8)
        assert a.mean == b.mean
        assert a.stderr == b.stderr

    def test_modulus_two_point(self):
        m = build_model(COV_PAIR_D1)
        est = estimate_modulus(m, 1.0, 100000, 5)
        expected = math.sqrt(2.0 / math.pi)  # E|X - Y| at distance 1
        assert abs(est.value - expected) <= 3.0 * est.stderr

    def test_modulus_empty_pairs_warns(self):
        m = build_model(COV_PAIR_D1)
        with pytest.warns(UserWarning):
            est = estimate_modulus(m, 0.5, 1000, 5)
        assert est.value == 0.0

    def test_modulus_monotone_in_delta(self):
        m = build_model(random_covariance(np.random.default_rng(4), 10))
        deltas = np.linspace(0.2, 1.0, 5) * m.space.diam
        vals = [estimate_modulus(m, float(d), 20000, 9).value for d in deltas]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestArgmax:
    def test_iid_uniform(self):
        m = build_model(np.eye(8))
        amd = argmax_distribution(m, 200000, 1)
        assert np.abs(amd.measure.weights - 0.125).max() < 0.005
        assert amd.tie_count == 0

    def test_rank_one_ties_to_lowest_index(self):
        m = build_model([[1.0, 1.0], [1.0, 1.0]])
        amd = argmax_distribution(m, 1000, 2)
        assert amd.tie_count == 1000
        assert np.array_equal(amd.measure.weights, [1.0, 0.0])


class TestBounds:
    def test_sudakov_collinear(self):
        from chainscope import build_from_points

        sp = build_from_points([[0.0], [1.0], [3.0]])
        value, (radius, m) = sudakov_bound(sp)
        assert value == pytest.approx(3.0, rel=1e-12)
        assert (radius, m) == (3.0, 2)

    def test_sudakov_below_esup_envelope(self, session_rng):
        # Sudakov minoration: a sqrt(log2 m) <= K E sup; artifact envelope K = 3
        for _ in range(5):
            C = random_covariance(session_rng, 12)
            m = build_model(C)
            value, _ = sudakov_bound(m.space)
            est = estimate_sup(m, 30000, 11)
            assert value <= 3.0 * (est.mean + 3 * est.stderr)

    def test_concentration_two_point(self):
        m = build_model(COV_PAIR_D1)
        rows = concentration_check(m, [0.5, 1.0, 2.0, 3.0], 50000, 13)
        assert len(rows) == 4
        assert not any(r["flagged"] for r in rows)

    def test_concentration_degenerate_warns(self):
        m = build_model([[0.0, 0.0], [0.0, 0.0]])
        with pytest.warns(UserWarning):
            assert concentration_check(m, [1.0], 100, 1) == []

    def test_concentration_correlated_scale(self):
        # X2 = 2 X1: canonical diameter is 1 but the sup fluctuates at
        # scale 2, so the bound must use the pointwise deviation
        m = build_model([[1.0, 2.0], [2.0, 4.0]])
        rows = concentration_check(m, [1.0, 2.0, 4.0], 50000, 29)
        assert not any(r["flagged"] for r in rows)

    def test_supremum_report_two_point(self):
        m = build_model(COV_PAIR_D1)
        rep = supremum_report(m, 100000, 7, [0.5, 1.0])
        assert abs(rep["esup"] - 1.0 / math.sqrt(2 * math.pi)) <= 3 * rep["esup_stderr"]
        assert rep["m_self_muF"] == pytest.approx(1.0, abs=0.02)
        for row in rep["modulus"]:
            assert row["s_delta"] <= row["upper_proxy"] * 50 + 1e-9

    def test_cluster_gap_dominates_entropy_term(self):
        # m far clusters of small spread: the supremum gain over a single
        # cluster must carry the sqrt(log2 m) factor (floor 0.2)
        rng = np.random.default_rng(42)
        m_clusters, per, sigma_c = 4, 3, 0.05
        a = 8.0 * sigma_c * 10  # well past the separation requirement
        centers = np.eye(m_clusters) * a / math.sqrt(2.0)
        pts = np.vstack([
            centers[i] + sigma_c * rng.standard_normal((per, m_clusters))
            for i in range(m_clusters)])
        model = build_model(pts @ pts.T)
        whole = estimate_sup(model, 40000, 3).mean
        cluster_sups = [
            estimate_sup(submodel(model, range(i * per, (i + 1) * per)), 40000, 3).mean
            for i in range(m_clusters)]
        gain = whole - min(cluster_sups)
        assert gain >= 0.2 * a * math.sqrt(math.log2(m_clusters))


class TestNestedNets:
    def test_nested_table_shape(self):
        model = build_model(np.eye(4))
        rows = nested_net_experiment(model, [[0, 1], [0, 1, 2, 3]], 50000, 5)
        assert [r["size"] for r in rows] == [2, 4]
        assert rows[0]["diff"] is None
        # equidistant iid at distance sqrt(2): M = sqrt(2) sqrt(log2 m)
        assert rows[0]["m_self"] == pytest.approx(math.sqrt(2.0), abs=0.02)
        assert rows[1]["m_self"] == pytest.approx(2.0, abs=0.03)

    def test_non_nested_rejected(self):
        model = build_model(np.eye(4))
        with pytest.raises(ValueError, match="nested"):
            nested_net_experiment(model, [[0, 1], [2, 3]], 100, 5)
