#!/usr/bin/env python3
"""Covering-number demo: dimension slopes and enlargement bounds for random
low-dimensional clouds embedded in higher-dimensional space."""

import argparse
import math
import random

from relukit.compositional import enlargement_cover_bound
from relukit.geometry import (
    PointCloud,
    enlarge_cloud,
    greedy_cover,
    minkowski_slope,
)


def random_curve_cloud(rng, m, n_points=400):
    freqs = [rng.uniform(0.5, 2.0) for _ in range(m)]
    phases = [rng.uniform(0, 2 * math.pi) for _ in range(m)]
    pts = []
    for _ in range(n_points):
        t = rng.random()
        pts.append(tuple(0.5 + 0.4 * math.sin(f * t * 4 + p)
                         for f, p in zip(freqs, phases)))
    return PointCloud(tuple(pts))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--clouds", type=int, default=10)
    ap.add_argument("--ambient", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    for i in range(args.clouds):
        cloud = random_curve_cloud(rng, args.ambient)
        slope, _ = minkowski_slope(cloud, [0.01, 0.02, 0.05, 0.1, 0.4])
        eta = 0.1
        eps = 0.05
        n_a = greedy_cover(cloud, eta, method="greedy").count
        big = enlarge_cloud(cloud, eps, rng, copies=5)
        lhs = greedy_cover(big, eta, method="greedy").count
        bound = enlargement_cover_bound(n_a, eps, eta, args.ambient,
                                        constant=4.0)
        print(f"cloud {i}: dim slope {slope:.2f}, N({eta:g})={n_a}, "
              f"enlarged N={lhs} <= bound {bound:.0f}")


if __name__ == "__main__":
    main()
