import json
import math
import random

import pytest

from relukit.geometry import (
    CoverReport,
    PointCloud,
    class_covering_bound,
    enlarge_cloud,
    greedy_cover,
    load_cloud,
    minkowski_slope,
)


def segment_cloud(rng, n, D=3):
    """Dense samples of a straight segment embedded in R^D."""
    direction = [1.0 / math.sqrt(D)] * D
    return PointCloud(
        tuple(tuple(t * d for d in direction) for t in sorted(rng.random() for _ in range(n)))
    )


class TestPointCloud:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PointCloud(())

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PointCloud(((0.0, float("nan")),))

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            PointCloud(((0.0,), (0.0, 1.0)))


class TestGreedyCover:
    def test_single_ball(self, rng):
        cloud = PointCloud(tuple((rng.random(),) for _ in range(40)))
        rep = greedy_cover(cloud, 0.5, method="greedy")
        assert rep.count == 1

    def test_cover_is_valid(self, rng):
        for _ in range(20):
            cloud = PointCloud(
                tuple(tuple(rng.random() for _ in range(3)) for _ in range(60))
            )
            eps = rng.uniform(0.05, 0.5)
            rep = greedy_cover(cloud, eps, method="greedy")
            for p in cloud.points:
                assert min(max(abs(a - b) for a, b in zip(p, c)) for c in rep.centers) <= eps

    def test_greedy_at_least_exact(self, rng):
        for _ in range(10):
            cloud = PointCloud(
                tuple(tuple(rng.random() for _ in range(2)) for _ in range(10))
            )
            eps = rng.uniform(0.1, 0.4)
            greedy = greedy_cover(cloud, eps, method="greedy")
            exact = greedy_cover(cloud, eps, method="exact-small")
            assert greedy.count >= exact.count
            assert exact.method == "exact-small"

    def test_two_clusters(self):
        cloud = PointCloud(((0.0, 0.0), (0.01, 0.0), (1.0, 0.0), (1.01, 0.0)))
        assert greedy_cover(cloud, 0.1).count >= 2

    def test_monotone_in_eps(self, rng):
        cloud = PointCloud(tuple(tuple(rng.random() for _ in range(2)) for _ in range(80)))
        counts = [greedy_cover(cloud, e, method="greedy").count
                  for e in (0.05, 0.1, 0.2, 0.4)]
        assert counts == sorted(counts, reverse=True)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            greedy_cover(PointCloud(((0.0,),)), 0.0)


class TestMinkowskiSlope:
    def test_segment_dimension_one(self, rng):
        cloud = segment_cloud(rng, 4000)
        slope, diag = minkowski_slope(cloud, [0.003, 0.01, 0.03, 0.1, 0.3])
        assert 0.8 <= slope <= 1.2
        assert diag["counts"] == sorted(diag["counts"], reverse=True)

    def test_square_dimension_two(self, rng):
        cloud = PointCloud(
            tuple((rng.random(), rng.random()) for _ in range(20000))
        )
        slope, _ = minkowski_slope(cloud, [0.02, 0.04, 0.1, 0.25, 0.7])
        assert 1.7 <= slope <= 2.3

    def test_single_point(self):
        cloud = PointCloud(((0.5, 0.5),))
        slope, _ = minkowski_slope(cloud, [0.01, 0.05, 0.1, 0.5])
        assert abs(slope) < 0.1

    def test_degenerate_grid(self):
        cloud = PointCloud(((0.0,), (1.0,)))
        with pytest.raises(ValueError):
            minkowski_slope(cloud, [0.1, 0.2, 0.3, 0.4])


class TestClassCoveringBound:
    def test_hand_value(self):
        want = 4 * 4 * 3 * (3 * math.log(5) + 3 * math.log(2) - math.log(0.1))
        assert class_covering_bound(4, 3, 2, 0.1) == pytest.approx(want)

    def test_doubling_width_ratio(self):
        # leading N^2 term dominates as eps shrinks
        a = class_covering_bound(8, 3, 2, 1e-30)
        b = class_covering_bound(4, 3, 2, 1e-30)
        assert 3.3 <= a / b <= 4.7

    def test_halving_eps_adds_log2_term(self):
        a = class_covering_bound(4, 3, 2, 0.05)
        b = class_covering_bound(4, 3, 2, 0.1)
        assert a - b == pytest.approx(16 * 3 * math.log(2))

    def test_vacuous_flagged(self):
        with pytest.raises(ValueError):
            class_covering_bound(2, 1, 1, 10.0)


class TestEnlargement:
    def test_cover_bound_numerically(self, rng):
        # greedy(A^{+eps}, eta) <= const * greedy(A, eta) * (1 + eps/eta)^m
        const = 2.0
        for _ in range(20):
            m = rng.randint(1, 3)
            base = PointCloud(
                tuple(tuple(rng.random() for _ in range(m)) for _ in range(30))
            )
            eta = rng.uniform(0.05, 0.2)
            eps = rng.uniform(0.5, 1.5) * eta
            big = enlarge_cloud(base, eps, rng, copies=6)
            lhs = greedy_cover(big, eta, method="greedy").count
            rhs = const * greedy_cover(base, eta, method="greedy").count * (1 + eps / eta) ** m
            assert lhs <= rhs


class TestIO:
    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "cloud.csv"
        path.write_text("0.0,1.0\n0.5,0.25\n")
        cloud = load_cloud(str(path))
        assert cloud.points == ((0.0, 1.0), (0.5, 0.25))

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "cloud.json"
        path.write_text(json.dumps({"points": [[0, 1], [2, 3]], "metadata": {"seed": 7}}))
        cloud = load_cloud(str(path))
        assert cloud.points == ((0.0, 1.0), (2.0, 3.0))
        assert cloud.metadata["seed"] == 7

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "cloud.json"
        path.write_text(json.dumps({"pts": []}))
        with pytest.raises(ValueError):
            load_cloud(str(path))
