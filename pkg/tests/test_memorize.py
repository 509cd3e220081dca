import random
from fractions import Fraction

import pytest

from relukit import RATIONAL, ScalarKind, evaluate, serialize
from relukit.memorize import (
    MemorizationInstance,
    ProjectionResult,
    load_instance,
    memorize_1d,
    memorize_nd,
    proposition_budget,
    separating_direction,
)


def grid_points(rng: random.Random, count, D, grid):
    """Distinct random points on a 1/grid lattice in [0,1)^D."""
    seen = set()
    while len(seen) < count:
        seen.add(tuple(Fraction(rng.randrange(grid), grid) for _ in range(D)))
    return sorted(seen)


class TestSeparatingDirection:
    def test_two_axis_points(self):
        pts = [(1, 0), (0, 1)]
        res = separating_direction(pts, rng_seed=7)
        assert isinstance(res, ProjectionResult)
        delta = Fraction(1)
        assert res.achieved_gap >= delta / (2 * 4 * 2)

    def test_random_cloud_gap(self, rng):
        pts = grid_points(rng, 32, 4, 64)
        res = separating_direction(pts, rng_seed=3)
        zs = [sum(c * t for c, t in zip(res.u_tilde, p)) for p in pts]
        gap = min(
            abs(zs[i] - zs[j])
            for i in range(len(zs))
            for j in range(i + 1, len(zs))
        )
        assert gap == res.achieved_gap
        assert gap >= Fraction(1, 64) / (2 * 32 * 32 * 4)
        assert all(abs(z) < 1 for z in zs)

    def test_single_point(self):
        res = separating_direction([(Fraction(1, 2), Fraction(1, 2))], rng_seed=0)
        assert res.achieved_gap == 1

    def test_deterministic(self):
        pts = [(0, 0), (1, 1)]
        a = separating_direction(pts, rng_seed=11)
        b = separating_direction(pts, rng_seed=11)
        assert a.u_tilde == b.u_tilde


class TestMemorize1d:
    def test_single_sample(self):
        net = memorize_1d([Fraction(1, 3)], [5], N=4, L=2, s=3, r=3, kind=RATIONAL)
        assert evaluate(net, [Fraction(1, 3)]) == [5]

    def test_four_samples_exact(self):
        xs = [Fraction(k, 8) for k in (1, 3, 5, 7)]
        ys = [0, 3, 5, 7]
        net = memorize_1d(xs, ys, N=4, L=2, s=3, r=3, kind=RATIONAL)
        for x, y in zip(xs, ys):
            assert evaluate(net, [x]) == [y]

    def test_off_sample_zero(self):
        s = 5
        xs = [Fraction(k, 8) for k in (1, 3, 5, 7)]
        ys = [3, 1, 7, 2]
        net = memorize_1d(xs, ys, N=4, L=2, s=s, r=3, kind=RATIONAL)
        for probe in (Fraction(0), Fraction(1, 4), Fraction(1, 2) + Fraction(1, 16),
                      Fraction(31, 32)):
            assert min(abs(probe - x) for x in xs) > Fraction(1, 2 ** (s + 1))
            assert evaluate(net, [probe]) == [0]

    def test_permutation_invariant(self, rng):
        xs = [Fraction(k, 16) for k in (1, 4, 7, 11, 14)]
        ys = [3, 0, 6, 2, 5]
        net_a = memorize_1d(xs, ys, N=4, L=4, s=5, r=3, kind=RATIONAL)
        order = list(range(5))
        rng.shuffle(order)
        net_b = memorize_1d([xs[i] for i in order], [ys[i] for i in order],
                            N=4, L=4, s=5, r=3, kind=RATIONAL)
        assert serialize(net_a) == serialize(net_b)

    def test_nonsample_positions_between_plateaus_bounded(self, rng):
        xs = [Fraction(k, 8) for k in (1, 5)]
        net = memorize_1d(xs, [1, 3], N=4, L=2, s=4, r=2, kind=RATIONAL)
        for _ in range(50):
            x = Fraction(rng.randrange(256), 256)
            (out,) = evaluate(net, [x])
            assert 0 <= out <= 4

    def test_separation_violated(self):
        with pytest.raises(ValueError):
            memorize_1d([Fraction(0), Fraction(1, 64)], [0, 1], N=4, L=2, s=3)

    def test_budget_too_small(self):
        xs = [Fraction(k, 32) for k in range(0, 32, 2)]
        with pytest.raises(ValueError):
            memorize_1d(xs, [0] * len(xs), N=1, L=1, s=4)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            memorize_1d([Fraction(1, 4)], [9], N=4, L=2, s=2, r=3)


class TestMemorizeNd:
    def test_two_points_3d(self):
        inst = MemorizationInstance(
            (((0, 0, 0), 1), ((1, 1, 1), 6)), r=3
        )
        net = memorize_nd(inst, N=4, L=2, rng_seed=5, kind=RATIONAL)
        assert evaluate(net, [Fraction(0)] * 3) == [1]
        assert evaluate(net, [Fraction(1)] * 3) == [6]

    def test_duplicate_point_rejected(self):
        with pytest.raises(ValueError):
            MemorizationInstance((((0, 0), 1), ((0, 0), 2)), r=2)

    def test_claimed_delta_checked(self):
        with pytest.raises(ValueError):
            MemorizationInstance(
                (((0, 0), 1), ((Fraction(1, 4), 0), 2)), r=2, delta=Fraction(1, 2)
            )

    def test_medium_instance_rational(self, rng):
        pts = grid_points(rng, 12, 3, 32)
        samples = tuple((p, rng.randrange(16)) for p in pts)
        inst = MemorizationInstance(samples, r=4)
        net = memorize_nd(inst, N=9, L=2, rng_seed=1, kind=RATIONAL)
        for p, y in samples:
            assert evaluate(net, list(p)) == [y]

    def test_medium_instance_bigfloat(self, rng):
        pts = grid_points(rng, 10, 4, 64)
        samples = tuple((p, rng.randrange(256)) for p in pts)
        inst = MemorizationInstance(samples, r=8)
        kind = ScalarKind.bigfloat(256)
        net = memorize_nd(inst, N=9, L=3, rng_seed=2, kind=kind)
        for p, y in samples:
            (out,) = evaluate(net, [float(t) for t in p])
            assert abs(float(out) - y) <= 2**-40

    def test_budget_formula_sane(self):
        b = proposition_budget(J=64, D=4, delta=Fraction(1, 256), N=16, L=4,
                               s=24, r=8)
        assert b["width"] == 16
        assert b["depth"] > 4
        assert b["B"] > 16


class TestInstanceIO:
    def test_round_trip(self):
        doc = {
            "D": 2,
            "r": 3,
            "samples": [{"x": ["1/2", "1/4"], "y": 5}, {"x": [0, 1], "y": 2}],
        }
        inst = load_instance(doc)
        assert inst.dim == 2
        assert inst.count == 2
        assert inst.samples[0] == ((Fraction(1, 2), Fraction(1, 4)), 5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            load_instance({"D": 3, "r": 1, "samples": [{"x": [0, 1], "y": 0}]})

    def test_malformed(self):
        with pytest.raises(ValueError):
            load_instance({"D": 2, "samples": []})
