import math
import random

import pytest

from relukit.targets import (
    GridPartition,
    HolderTarget,
    bump_target,
    constant_target,
    multi_indices,
    poly_target_1d,
    sine_curve_target,
)


class TestMultiIndices:
    def test_counts_1d(self):
        assert multi_indices(1, 2) == [(0,), (1,), (2,)]

    def test_counts_2d(self):
        idx = multi_indices(2, 2)
        assert len(idx) == 6
        assert all(sum(a) <= 2 for a in idx)
        # ordered by total degree
        totals = [sum(a) for a in idx]
        assert totals == sorted(totals)

    def test_no_duplicates(self):
        idx = multi_indices(3, 3)
        assert len(idx) == len(set(idx))


class TestHolderTarget:
    def test_wrong_derivative_rejected(self):
        partials = {
            (0,): lambda x: x[0] ** 2,
            (1,): lambda x: 3.0 * x[0],  # should be 2 x
        }
        with pytest.raises(ValueError):
            HolderTarget(1, 1.0, 1.0, partials[(0,)], partials,
                         lambda rng, n: [(rng.random(),) for _ in range(n)])

    def test_missing_oracle_rejected(self):
        with pytest.raises(ValueError):
            HolderTarget(1, 2.0, 1.0, lambda x: 0.0, {(0,): lambda x: 0.0},
                         lambda rng, n: [])

    def test_sine_curve_validates(self):
        target = sine_curve_target(s=2.0)
        assert target.D == 3
        assert target.taylor_order() == 2
        for x in [(0.0, 0.5, 0.5), (0.25, 0.1, 0.9)]:
            assert 0.0 <= target.f(x) <= 0.5

    def test_sine_curve_sampler_on_curve(self):
        target = sine_curve_target()
        rng = random.Random(0)
        for x in target.sample(rng, 50):
            assert len(x) == 3
            assert all(0.0 <= t <= 1.0 for t in x)
            # second coordinate is a function of the first
            assert x[1] == pytest.approx(0.5 + 0.4 * math.sin(math.pi * x[0]))

    def test_poly_oracles(self):
        target = poly_target_1d([1.0, -2.0, 3.0], s=2.0)  # 1 - 2x + 3x^2
        assert target.f((0.5,)) == pytest.approx(0.75)
        assert target.partials[(1,)]((0.5,)) == pytest.approx(1.0)
        assert target.partials[(2,)]((0.9,)) == pytest.approx(6.0)

    def test_constant_target(self):
        target = constant_target(0.7, D=2, s=1.0)
        assert target.f((0.1, 0.9)) == 0.7
        assert target.partials[(1, 0)]((0.5, 0.5)) == 0.0


class TestGridPartition:
    def test_cell_of_interior_and_boundary(self):
        assert GridPartition.cell_of((0.3,), 4) == (1,)
        assert GridPartition.cell_of((0.0,), 4) == (0,)
        # x = 1 folds into the last closed cell
        assert GridPartition.cell_of((1.0,), 4) == (3,)

    def test_discover_full_interval(self):
        target = constant_target(1.0, D=1, s=1.0)
        grid = GridPartition.discover(target, 8, n_samples=5000, seed=1)
        assert grid.occupied == frozenset((k,) for k in range(8))

    def test_discover_curve_sparse(self):
        target = sine_curve_target()
        grid = GridPartition.discover(target, 32, n_samples=20000, seed=2)
        # a 1-d curve occupies O(K) of the 32^3 cells
        assert 32 <= len(grid.occupied) <= 32 * 8

    def test_corner_is_rational(self):
        grid = GridPartition(4, frozenset({(1, 2)}))
        from fractions import Fraction

        assert grid.corner((1, 2)) == (Fraction(1, 4), Fraction(1, 2))

    def test_bad_cell_rejected(self):
        with pytest.raises(ValueError):
            GridPartition(4, frozenset({(4,)}))


class TestBumpTarget:
    def test_empty_support_zero(self):
        target = bump_target({}, K=4, s=2.0)
        rng = random.Random(0)
        assert all(target.f(x) == 0.0 for x in target.sample(rng, 50))

    def test_single_bump_center_value(self):
        K, s, a = 4, 2.0, 1.5
        target = bump_target({(1,): 1}, K=K, s=s, a=a, D=1)
        # center of the cell: u = 1/2, so (u(1-u))^(s+1) = 4^-(s+1)
        want = a * K**-s * 0.25 ** (s + 1)
        assert target.f(((1 + 0.5) / K,)) == pytest.approx(want)

    def test_outside_support_zero(self):
        target = bump_target({(1,): 1}, K=4, s=2.0)
        assert target.f((0.9,)) == 0.0

    def test_disjoint_bumps_add(self):
        lone = bump_target({(0,): 1}, K=4, s=2.0)
        pair = bump_target({(0,): 1, (2,): 1}, K=4, s=2.0)
        x = (0.125,)
        assert pair.f(x) == pytest.approx(lone.f(x))
        assert pair.f((0.625,)) == pytest.approx(lone.f((0.125,)))

    def test_derivative_oracles_match_fd(self):
        # validation is off by default (bumps are not smooth enough at cell
        # boundaries for blind probing); check manually inside the support
        target = bump_target({(1,): 1}, K=2, s=2.0, D=1)
        h = 1e-6
        for x in (0.55, 0.7, 0.9):
            fd = (target.f((x + h,)) - target.f((x - h,))) / (2 * h)
            assert target.partials[(1,)]((x,)) == pytest.approx(fd, abs=1e-6)

    def test_bad_support_cell(self):
        with pytest.raises(ValueError):
            bump_target({(5,): 1}, K=4, s=2.0)
