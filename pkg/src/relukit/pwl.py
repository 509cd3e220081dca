"""Piecewise-linear network synthesis, bump indicators, and median smoothing.

``pwl_net`` realizes an interpolant exactly with one hidden layer of width M
(one ReLU per breakpoint).  The depth-efficient variant from the literature
is not reconstructed; its claimed weight budget is recorded via
:func:`claimed_weight_bound` for comparison in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .nets import Network, affine_net, compose, parallelize_many
from .scalars import RATIONAL, ScalarKind, scalar_context, to_scalar

__all__ = [
    "PwlSpec",
    "SmoothingConfig",
    "pwl_net",
    "claimed_weight_bound",
    "bump_net",
    "mid_net",
    "median_smooth",
    "median_smooth_fn",
    "in_band",
    "modulus_of_continuity",
]

MAX_SMOOTHING_DIM = 8  # 3^D width growth; override via allow_wide


@dataclass(frozen=True)
class PwlSpec:
    """Breakpoints of a continuous piecewise-linear function.

    ``points`` is an ascending sequence of (x, y) pairs; outside the
    breakpoint range the function extends constantly (default) or linearly.
    """

    points: tuple
    extend_left_constant: bool = True
    extend_right_constant: bool = True

    def __post_init__(self):
        pts = tuple((Fraction(x), Fraction(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("need at least 2 breakpoints")
        for (x0, _), (x1, _) in zip(pts, pts[1:]):
            if not x0 < x1:
                raise ValueError("breakpoints must be strictly increasing")

    @property
    def xs(self):
        return tuple(p[0] for p in self.points)

    @property
    def ys(self):
        return tuple(p[1] for p in self.points)

    def normalized_gap(self) -> Fraction:
        """min_i (x_i - x_{i-1}) / max(1, max_i |x_i|)."""
        xs = self.xs
        gap = min(b - a for a, b in zip(xs, xs[1:]))
        return gap / max(Fraction(1), max(abs(x) for x in xs))

    def __call__(self, x):
        """Direct linear-interpolation oracle (independent of pwl_net)."""
        pts = self.points
        if x <= pts[0][0]:
            if self.extend_left_constant:
                return pts[0][1]
            (x0, y0), (x1, y1) = pts[0], pts[1]
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        if x >= pts[-1][0]:
            if self.extend_right_constant:
                return pts[-1][1]
            (x0, y0), (x1, y1) = pts[-2], pts[-1]
            return y1 + (y1 - y0) * (x - x1) / (x1 - x0)
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        raise AssertionError("unreachable")


def pwl_net(spec: PwlSpec, kind: ScalarKind = RATIONAL) -> Network:
    """One-hidden-layer network realizing ``spec`` exactly.

    phi(x) = y_1 + s_0 (x - x_1) + sum_i (s_i - s_{i-1}) relu(x - x_i)
    with s_i the segment slopes and s_0/s_M the extension slopes.
    """
    xs, ys = spec.xs, spec.ys
    M = len(xs)
    slopes = [
        (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(M - 1)
    ]
    s_left = Fraction(0) if spec.extend_left_constant else slopes[0]
    s_right = Fraction(0) if spec.extend_right_constant else slopes[-1]
    ext = [s_left] + slopes + [s_right]
    coeffs = [ext[i + 1] - ext[i] for i in range(M)]

    rows = [[Fraction(1)] for _ in range(M)]
    bias = [-x for x in xs]
    out = list(coeffs)
    if s_left != 0:
        # linear base term needs an identity pair
        rows += [[Fraction(1)], [Fraction(-1)]]
        bias += [Fraction(0), Fraction(0)]
        out += [s_left, -s_left]
    v_out = ys[0] - s_left * xs[0]
    with scalar_context(kind):
        W0 = tuple(tuple(to_scalar(w, kind) for w in r) for r in rows)
        v0 = tuple(to_scalar(b, kind) for b in bias)
        W1 = (tuple(to_scalar(w, kind) for w in out),)
        v1 = (to_scalar(v_out, kind),)
    return Network((1, len(rows), 1), ((W0, v0), (W1, v1)), kind)


def claimed_weight_bound(spec: PwlSpec, L: int) -> float:
    """The cited depth-L budget (M^6 delta^-4 ybar)^(1/L), recorded only."""
    M = len(spec.points)
    delta = float(spec.normalized_gap())
    ybar = max(1.0, max(abs(float(y)) for y in spec.ys))
    return (M**6 * delta**-4 * ybar) ** (1.0 / L)


def bump_net(s: int, kind: ScalarKind = RATIONAL) -> Network:
    """The 6-point separation indicator: value 2^-s on |x| <= 2^-(s+2),
    zero for |x| >= 2^-(s+1), linear in between."""
    if s < 1:
        raise ValueError("s must be >= 1")
    h = Fraction(1, 2**s)
    spec = PwlSpec(
        (
            (Fraction(-2), 0),
            (-h / 2, 0),
            (-h / 4, h),
            (h / 4, h),
            (h / 2, 0),
            (Fraction(2), 0),
        )
    )
    return pwl_net(spec, kind)


def mid_net(kind: ScalarKind = RATIONAL) -> Network:
    """3-input network computing the median of (a, b, c) exactly.

    mid = a+b+c - max(a,b,c) - min(a,b,c), expanded into two ReLU layers;
    width 9, depth 2, all weights in {-1, 0, 1}.
    """
    F = Fraction
    # hidden 1: a-b, b, -b, a, -a, c, -c, s, -s   (s = a+b+c)
    W0 = [
        [1, -1, 0],
        [0, 1, 0],
        [0, -1, 0],
        [1, 0, 0],
        [-1, 0, 0],
        [0, 0, 1],
        [0, 0, -1],
        [1, 1, 1],
        [-1, -1, -1],
    ]
    # linear combos: m1 = u1+u2-u3, n1 = u4-u5-u1, c = u6-u7, s = u8-u9
    m1 = [1, 1, -1, 0, 0, 0, 0, 0, 0]
    n1 = [-1, 0, 0, 1, -1, 0, 0, 0, 0]
    cc = [0, 0, 0, 0, 0, 1, -1, 0, 0]
    ss = [0, 0, 0, 0, 0, 0, 0, 1, -1]

    def lin(*terms):
        row = [0] * 9
        for vec, sign in terms:
            for j, w in enumerate(vec):
                row[j] += sign * w
        return row

    # hidden 2: m1-c, c, -c, n1, -n1, n1-c, s, -s
    W1 = [
        lin((m1, 1), (cc, -1)),
        cc,
        lin((cc, -1)),
        n1,
        lin((n1, -1)),
        lin((n1, 1), (cc, -1)),
        ss,
        lin((ss, -1)),
    ]
    # mid = s - (w1 + w2 - w3) - (w4 - w5 - w6), s = w7 - w8
    W2 = [[-1, -1, 1, -1, 1, 1, 1, -1]]
    with scalar_context(kind):
        layers = tuple(
            (
                tuple(tuple(to_scalar(F(w), kind) for w in row) for row in W),
                tuple(to_scalar(0, kind) for _ in W),
            )
            for W in (W0, W1, W2)
        )
    return Network((3, 9, 8, 1), layers, kind)


@dataclass(frozen=True)
class SmoothingConfig:
    """Grid resolution K, band half-width delta in (0, 1/(3K)], dimension D."""

    K: int
    delta: Fraction
    D: int

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.K < 1 or self.D < 1:
            raise ValueError("K and D must be positive")
        if not (0 < self.delta <= Fraction(1, 3 * self.K)):
            raise ValueError("need delta in (0, 1/(3K)]")


def median_smooth(net: Network, cfg: SmoothingConfig, allow_wide: bool = False) -> Network:
    """Coordinate-wise 3-point median over +-delta shifts, per dimension.

    Returns a network of width <= 3^D (N + 4) and depth L + 2D that repairs
    corruption confined to the grid bands.
    """
    if net.input_dim != cfg.D:
        raise ValueError("net input dim != cfg.D")
    if net.output_dim != 1:
        raise ValueError("median smoothing needs scalar output")
    if cfg.D > MAX_SMOOTHING_DIM and not allow_wide:
        raise ValueError(
            f"D={cfg.D} exceeds width cap 3^D; pass allow_wide=True to force"
        )
    kind = net.scalar_kind
    D = cfg.D
    delta = cfg.delta
    mid = mid_net(kind)
    eye = [[Fraction(int(i == j)) for j in range(D)] for i in range(D)]
    cur = net
    for axis in range(D):
        shifts = []
        for sign in (-1, 0, 1):
            b = [Fraction(0)] * D
            b[axis] = sign * delta
            shifts.append(compose(cur, affine_net(eye, b, kind)))
        cur = compose(mid, parallelize_many(*shifts))
    return cur


def median_smooth_fn(g, delta, D: int):
    """Function-level analogue of :func:`median_smooth` for oracles/tests."""
    delta = float(delta)

    def smoothed(x):
        def rec(pt, axis):
            if axis == 0:
                return g(pt)
            vals = []
            for sign in (-1, 0, 1):
                q = list(pt)
                q[axis - 1] += sign * delta
                vals.append(rec(q, axis - 1))
            return sorted(vals)[1]

        return rec(list(x), D)

    return smoothed


def in_band(x, K: int, delta) -> bool:
    """Membership in the band set Omega_{K,delta}: some coordinate lies in
    (k/K - delta, k/K) for k = 1, ..., K-1."""
    delta = Fraction(delta)
    for t in x:
        t = Fraction(t)
        k = math.ceil(t * K)
        if 1 <= k <= K - 1 and Fraction(k, K) - delta < t < Fraction(k, K):
            return True
    return False


def modulus_of_continuity(f, delta, D: int, rng, n_samples: int = 2000) -> float:
    """Sampled estimate of omega_f(delta) on [0,1]^D (not a certificate)."""
    delta = float(delta)
    best = 0.0
    for _ in range(n_samples):
        x = [rng.uniform(0.0, 1.0) for _ in range(D)]
        y = [
            min(1.0, max(0.0, t + rng.uniform(-delta, delta))) for t in x
        ]
        best = max(best, abs(f(x) - f(y)))
    return best
