"""Covering numbers, Minkowski-dimension slope fits, and class-size bounds.

All covers use the sup norm.  Greedy covering gives an upper bound on the
covering number; a brute-force minimal cover is available for tiny clouds.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "CoverReport",
    "greedy_cover",
    "minkowski_slope",
    "class_covering_bound",
    "enlarge_cloud",
    "load_cloud",
]

EXACT_SMALL_LIMIT = 20


@dataclass(frozen=True)
class PointCloud:
    """Finite point set in R^D with provenance metadata."""

    points: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = tuple(tuple(float(t) for t in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("empty cloud")
        D = len(pts[0])
        for p in pts:
            if len(p) != D:
                raise ValueError("inconsistent dimensions")
            if any(not math.isfinite(t) for t in p):
                raise ValueError("non-finite coordinate")

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class CoverReport:
    eps: float
    centers: tuple
    count: int
    method: str

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "count": self.count,
            "method": self.method,
            "centers": [list(c) for c in self.centers],
        }


def _inf_dist(a, b) -> float:
    return max(abs(x - y) for x, y in zip(a, b))


def _covers(centers, points, eps) -> bool:
    return all(any(_inf_dist(p, c) <= eps for c in centers) for p in points)


def greedy_cover(cloud: PointCloud, eps: float, method: str = "auto") -> CoverReport:
    """Sup-norm eps-cover by cloud points.

    ``greedy`` scans points in order and opens a new center whenever a point
    is uncovered (upper bound on N(eps)); ``exact-small`` finds a minimal
    cover by exhaustive search and is limited to tiny clouds.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = cloud.points
    if method == "auto":
        method = "exact-small" if len(pts) <= EXACT_SMALL_LIMIT else "greedy"
    arr = np.asarray(pts, dtype=float)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    if np.max(hi - lo) <= 2 * eps:
        # whole cloud fits one ball centered at the bounding-box midpoint
        center = tuple((lo + hi) / 2)
        return CoverReport(float(eps), (center,), 1, method)
    if method == "greedy":
        # scan centroid-outward; remaining centers are cloud points
        centroid = arr.mean(axis=0)
        order = np.argsort(np.max(np.abs(arr - centroid), axis=1), kind="stable")
        uncovered = np.ones(len(arr), dtype=bool)
        centers = []
        for idx in order:
            if not uncovered[idx]:
                continue
            center = arr[idx]
            centers.append(tuple(center))
            uncovered &= np.max(np.abs(arr - center), axis=1) > eps
        return CoverReport(float(eps), tuple(centers), len(centers), "greedy")
    if method == "exact-small":
        if len(pts) > EXACT_SMALL_LIMIT:
            raise ValueError(f"exact-small limited to {EXACT_SMALL_LIMIT} points")
        for k in range(1, len(pts) + 1):
            for combo in itertools.combinations(pts, k):
                if _covers(combo, pts, eps):
                    return CoverReport(float(eps), combo, k, "exact-small")
        raise AssertionError("unreachable: full set always covers")
    raise ValueError(f"unknown method {method!r}")


def minkowski_slope(cloud: PointCloud, eps_grid) -> tuple:
    """Least-squares slope of log N(eps) versus log(1/eps).

    Scales where the greedy count saturates at the sample count are dropped
    (the cloud cannot resolve structure below its own spacing), provided at
    least four scales remain.  Returns (slope, diagnostics).
    """
    eps_grid = sorted(float(e) for e in eps_grid)
    if len(eps_grid) < 4:
        raise ValueError("need at least 4 scales")
    if eps_grid[-1] / eps_grid[0] < 10**1.5:
        raise ValueError("eps grid must span at least 1.5 decades")
    counts = [greedy_cover(cloud, e, method="greedy").count for e in eps_grid]
    keep = [i for i, c in enumerate(counts) if c < len(cloud)]
    if len(keep) < 4:
        keep = list(range(len(eps_grid)))
    xs = np.log([1.0 / eps_grid[i] for i in keep])
    ys = np.log([counts[i] for i in keep])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    diagnostics = {
        "eps": [eps_grid[i] for i in keep],
        "counts": [counts[i] for i in keep],
        "dropped_scales": len(eps_grid) - len(keep),
        "intercept": float(intercept),
        "max_abs_residual": float(np.max(np.abs(resid))) if len(keep) else 0.0,
    }
    return float(slope), diagnostics


def class_covering_bound(N: int, L: int, B: float, eps: float, c: float = 1.0) -> float:
    """c * N^2 L * log((N+1)^L B^L / eps), the metric-entropy bound for the
    network class with width N, depth L, weight bound B."""
    if min(N, L) < 1 or B <= 0 or eps <= 0:
        raise ValueError("arguments must be positive")
    log_inner = L * math.log(N + 1) + L * math.log(B) - math.log(eps)
    if log_inner <= 0:
        raise ValueError("vacuous bound: eps >= (N+1)^L B^L")
    return c * N * N * L * log_inner


def enlarge_cloud(cloud: PointCloud, eps: float, rng, copies: int = 8) -> PointCloud:
    """Sample the sup-norm eps-enlargement: each point plus jittered copies."""
    pts = list(cloud.points)
    out = list(pts)
    for p in pts:
        for _ in range(copies):
            out.append(tuple(t + rng.uniform(-eps, eps) for t in p))
    meta = dict(cloud.metadata)
    meta["enlarged_by"] = float(eps)
    return PointCloud(tuple(out), meta)


def load_cloud(path: str) -> PointCloud:
    """Read a cloud from CSV (one point per row) or JSON {"points": [...]}. """
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        try:
            pts = [tuple(float(t) for t in p) for p in doc["points"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed cloud file: {exc}") from exc
        return PointCloud(tuple(pts), doc.get("metadata", {}))
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    try:
        pts = [tuple(float(t) for t in row) for row in rows]
    except ValueError as exc:
        raise ValueError(f"malformed cloud file: {exc}") from exc
    return PointCloud(tuple(pts), {"source": path})
