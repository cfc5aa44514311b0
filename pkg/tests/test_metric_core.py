import math

import numpy as np
import pytest

from chainscope import (MetricValidationError, build_from_covariance,
                        build_from_distance_matrix, build_from_points,
                        covering_number, entropy_integral,
                        modulus_entropy_diagnostic)
from chainscope.metric_core import (exact_covering_number, greedy_cover_size,
                                    greedy_packing, greedy_permutation)

from conftest import random_space


class TestValidation:
    def test_two_point(self):
        sp = build_from_distance_matrix([[0, 1], [1, 0]])
        assert sp.n == 2
        assert sp.diam == 1.0

    def test_asymmetric(self):
        with pytest.raises(MetricValidationError, match=r"asymmetric at \(0,1\)"):
            build_from_distance_matrix([[0, 1], [2, 0]])

    def test_nonzero_diagonal(self):
        with pytest.raises(MetricValidationError, match="diagonal"):
            build_from_distance_matrix([[0.5, 1], [1, 0]])

    def test_negative_entry(self):
        with pytest.raises(MetricValidationError, match="negative"):
            build_from_distance_matrix([[0, -1], [-1, 0]])

    def test_triangle_violation(self):
        D = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
        with pytest.raises(MetricValidationError, match=r"triangle violated \(0,2\) via 1"):
            build_from_distance_matrix(D)

    def test_non_square(self):
        with pytest.raises(MetricValidationError, match="square"):
            build_from_distance_matrix([[0, 1, 2], [1, 0, 1]])

    def test_covariance_identity(self):
        sp = build_from_covariance(np.eye(2))
        assert sp.dist[0, 1] == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_covariance_not_psd(self):
        with pytest.raises(MetricValidationError, match="PSD"):
            build_from_covariance([[1.0, 2.0], [2.0, 1.0]])

    def test_covariance_roundtrip_revalidates(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((6, 6))
        sp = build_from_covariance(A @ A.T)
        again = build_from_distance_matrix(sp.dist)
        assert np.array_equal(again.dist, sp.dist)

    def test_points_collinear(self):
        sp = build_from_points([[0.0], [1.0], [3.0]])
        assert sp.diam == 3.0
        assert sp.dist[1, 2] == 2.0


class TestCovering:
    def test_radius_at_diam_is_one(self, session_rng):
        sp = random_space(session_rng, 9)
        assert greedy_cover_size(sp, sp.diam) == 1

    def test_radius_below_min_distance_is_n(self, session_rng):
        sp = random_space(session_rng, 9)
        d_min = float(sp.distinct_distances()[0])
        assert greedy_cover_size(sp, d_min * 0.49) == sp.n

    def test_cover_size_monotone_in_radius(self, session_rng):
        for _ in range(10):
            sp = random_space(session_rng, 12)
            radii = np.linspace(0, sp.diam, 13)
            sizes = [greedy_cover_size(sp, r) for r in radii]
            assert all(a >= b for a, b in zip(sizes, sizes[1:]))

    def test_certified_sandwich_contains_exact(self, session_rng):
        for _ in range(10):
            sp = random_space(session_rng, 10)
            for frac in (0.1, 0.3, 0.6):
                rad = frac * sp.diam
                rep = covering_number(sp, rad)
                exact = exact_covering_number(sp, rad)
                lo, hi = rep.certified_bounds
                assert lo <= exact <= hi

    def test_greedy_tie_break_lowest_index(self):
        # square: after center 0 the farthest points 1 and 2 tie at distance 1
        pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        sp = build_from_points(pts)
        order, _ = greedy_permutation(sp)
        assert order[0] == 0
        assert order[1] == 3  # unique farthest
        assert order[2] == 1  # 1 and 2 tie; lowest index wins

    def test_packing_strict_vs_nonstrict(self):
        sp = build_from_points([[0.0], [1.0], [2.0]])
        assert greedy_packing(sp, 1.0, strict=True) == [0, 2]
        assert greedy_packing(sp, 1.0, strict=False) == [0, 1, 2]


class TestEntropyIntegral:
    def test_two_point_value(self):
        sp = build_from_distance_matrix([[0, 1], [1, 0]])
        # cover size is 2 on (0, 1), 1 at 1: integral of sqrt(log2 2) over (0,1]
        assert float(entropy_integral(sp, sp.diam)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("m", [2, 4, 8, 16])
    def test_equidistant_closed_form(self, m):
        a = 1.7
        D = a * (np.ones((m, m)) - np.eye(m))
        sp = build_from_distance_matrix(D)
        expected = a * math.sqrt(math.log2(m))
        assert float(entropy_integral(sp, sp.diam)) == pytest.approx(expected, rel=1e-12)

    def test_monotone_and_saturates_at_diam(self, session_rng):
        sp = random_space(session_rng, 14)
        deltas = np.linspace(0.05, 2.0, 12) * sp.diam
        vals = [float(entropy_integral(sp, d)) for d in deltas]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        top = float(entropy_integral(sp, sp.diam))
        assert float(entropy_integral(sp, 10 * sp.diam)) == pytest.approx(top, rel=1e-12)

    def test_riemann_bracket(self, session_rng):
        # left/right endpoint sums bracket the exact step-function integral
        for _ in range(5):
            sp = random_space(session_rng, 10)
            exact = float(entropy_integral(sp, sp.diam))
            grid = np.linspace(0.0, sp.diam, 20001)
            h = grid[1] - grid[0]
            sizes = np.array([greedy_cover_size(sp, g) for g in grid], dtype=float)
            f = np.sqrt(np.log2(np.maximum(sizes, 1.0)))
            left = h * f[:-1].sum()
            right = h * f[1:].sum()
            assert right - 1e-9 <= exact <= left + 1e-9

    def test_diagnostic_rows(self):
        sp = build_from_distance_matrix([[0, 1], [1, 0]])
        rows = modulus_entropy_diagnostic(sp)
        assert rows == [(1.0, 1.0)]

    def test_singleton_all_trivial(self):
        sp = build_from_distance_matrix([[0.0]])
        assert sp.diam == 0.0
        assert float(entropy_integral(sp, 1.0)) == 0.0
        assert modulus_entropy_diagnostic(sp) == []
