"""Point-fitting networks: exact label recall from packed bit streams.

Pipeline: project samples to one dimension through a random separating
direction, truncate positions to dyadic rationals, pack positions and
labels into ternary block codes readable by a piecewise-linear plateau
function of the input, then run an iterative decode-and-match loop whose
gate releases a label only when a proximity bump and a direct distance
comb both fire.  A final scaling chain restores the label magnitude.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitcodec import bit_decode_net, block_encode
from .nets import (
    Network,
    _matrix,
    _vector,
    affine_net,
    compose,
    convert_network,
    parallelize_many,
    scaling_chain,
)
from .pwl import PwlSpec, bump_net, pwl_net
from .scalars import RATIONAL, ScalarKind

__all__ = [
    "MemorizationInstance",
    "ProjectionResult",
    "separating_direction",
    "memorize_1d",
    "memorize_nd",
    "proposition_budget",
    "load_instance",
]


@dataclass(frozen=True)
class MemorizationInstance:
    """Samples (x_j in [0,1]^D, y_j in {0..2^r - 1}) with min separation."""

    samples: tuple
    r: int
    delta: Fraction | None = None

    def __post_init__(self):
        samples = tuple(
            (tuple(Fraction(t) for t in x), int(y)) for x, y in self.samples
        )
        object.__setattr__(self, "samples", samples)
        if not samples:
            raise ValueError("no samples")
        D = len(samples[0][0])
        for x, y in samples:
            if len(x) != D:
                raise ValueError("inconsistent dimensions")
            if any(not 0 <= t <= 1 for t in x):
                raise ValueError("points must lie in [0,1]^D")
            if not 0 <= y < 2**self.r:
                raise ValueError(f"label {y} outside [0, 2^{self.r})")
        delta = self.delta
        if len(samples) > 1:
            sep = _min_separation([x for x, _ in samples])
            if sep == 0:
                raise ValueError("duplicate points")
            if delta is None:
                delta = sep
            elif sep < Fraction(delta):
                raise ValueError(f"claimed separation {delta} exceeds actual {sep}")
        object.__setattr__(self, "delta", Fraction(delta) if delta else None)

    @property
    def dim(self) -> int:
        return len(self.samples[0][0])

    @property
    def count(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ProjectionResult:
    """Sampled unit direction u, its rational rounding u_tilde ~ u/sqrt(D),
    and the exactly verified min projected pairwise gap."""

    u: tuple
    u_tilde: tuple
    achieved_gap: Fraction


def _min_pairwise_gap(zs) -> Fraction:
    zs = sorted(zs)
    return min(b - a for a, b in zip(zs, zs[1:]))


def _min_separation(points) -> Fraction:
    """Exact min pairwise sup distance; float prefilter keeps it near O(J^2)
    in numpy rather than Fraction arithmetic."""
    J = len(points)
    arr = np.array([[float(t) for t in p] for p in points])
    best = math.inf
    candidates = []
    chunk = max(1, 2**22 // max(1, J))
    for lo in range(0, J, chunk):
        block = np.max(
            np.abs(arr[lo:lo + chunk, None, :] - arr[None, :, :]), axis=-1
        )
        for i in range(block.shape[0]):
            block[i, : lo + i + 1] = math.inf
        m = float(block.min())
        if m < best * (1 + 1e-9):
            best = min(best, m)
            for i, j in zip(*np.nonzero(block <= best * (1 + 1e-9) + 1e-300)):
                candidates.append((lo + int(i), int(j)))
    # exact distance only for the float near-minimal pairs
    thresh = best * (1 + 1e-9)
    return min(
        max(abs(a - b) for a, b in zip(points[i], points[j]))
        for i, j in candidates
        if max(abs(float(a) - float(b)) for a, b in zip(points[i], points[j])) <= thresh
    )


def separating_direction(points, max_tries: int | None = None, rng_seed: int = 0,
                         target_gap: Fraction | None = None) -> ProjectionResult:
    """Random direction whose rational rounding separates the projections.

    The gap and the bound |u_tilde . x| < 1 are verified exactly on the
    rounded vector, so downstream rational arithmetic stays exact.  The
    default target gap is delta / (2 J^2 D).
    """
    points = [tuple(Fraction(t) for t in p) for p in points]
    J = len(points)
    D = len(points[0])
    rng = random.Random(rng_seed)
    if max_tries is None:
        max_tries = max(10, 10 * J * J)
    if target_gap is None and J > 1:
        delta = min(
            max(abs(a - b) for a, b in zip(points[i], points[j]))
            for i in range(J)
            for j in range(i + 1, J)
        )
        target_gap = delta / (2 * J * J * D)
    denom = 2**40
    for _ in range(max_tries):
        g = [rng.gauss(0.0, 1.0) for _ in range(D)]
        norm = math.sqrt(sum(t * t for t in g)) * math.sqrt(D)
        if norm == 0:
            continue
        u = tuple(t * math.sqrt(D) / norm for t in g)
        u_tilde = tuple(Fraction(round(t / norm * denom), denom) for t in g)
        zs = [sum(c * t for c, t in zip(u_tilde, p)) for p in points]
        if any(abs(z) >= 1 for z in zs):
            continue
        if J == 1:
            return ProjectionResult(u, u_tilde, Fraction(1))
        gap = _min_pairwise_gap(zs)
        if gap >= target_gap:
            return ProjectionResult(u, u_tilde, gap)
    raise RuntimeError(
        f"no separating direction after {max_tries} tries (retry with a new seed)"
    )


def _carrier(kind: ScalarKind) -> Network:
    """Depth-1 pass-through for nonnegative scalars: relu(x) = x."""
    one, zero = _matrix([[Fraction(1)]], kind), _vector([Fraction(0)], kind)
    return Network((1, 1, 1), ((one, zero), (one, zero)), kind)


def _selector(index: int, width: int, kind: ScalarKind) -> Network:
    row = [Fraction(int(j == index)) for j in range(width)]
    return affine_net([row], [Fraction(0)], kind)


def _plateau_spec(groups, values, lift: Fraction) -> PwlSpec:
    """Constant value values[m] on [min of group m, max of group m + lift]."""
    pts = []
    for (a, b), val in zip(groups, values):
        pts.append((a, val))
        pts.append((b + lift, val))
    return PwlSpec(tuple(pts))


def _comb_spec(xhats, q: Fraction, h: Fraction) -> PwlSpec:
    """Proximity comb: value h on each [xhat, xhat + q], reaching 0 at
    distance q on the left and 2q on the right; merged duplicate knots."""
    pts = []
    for xh in xhats:
        pts += [(xh - q, Fraction(0)), (xh, h), (xh + q, h), (xh + 2 * q, Fraction(0))]
    merged = []
    for x, y in pts:
        if merged and merged[-1][0] == x:
            if merged[-1][1] != y:
                raise AssertionError("comb knots collide with distinct values")
            continue
        merged.append((x, y))
    return PwlSpec(tuple(merged))


def _iteration_block(c: int, n: int, s: int, kind: ScalarKind) -> Network:
    """One decode-and-match step on the state (x, u, w, nu, acc)."""
    F = Fraction
    dec = bit_decode_net(n, c, kind)
    car = _carrier(kind)
    sel = lambda i: _selector(i, 5, kind)
    phase1 = parallelize_many(
        compose(car, sel(0)),
        compose(dec, sel(1)),
        compose(dec, sel(2)),
        compose(car, sel(3)),
        compose(car, sel(4)),
    )
    # state now (x, val_u, u', val_w, w', nu, acc)
    diff = affine_net([[F(1), F(-1), F(0), F(0), F(0), F(0), F(0)]], [F(0)], kind)
    phase2 = parallelize_many(
        compose(car, _selector(0, 7, kind)),
        compose(bump_net(s, kind), diff),
        compose(car, _selector(2, 7, kind)),
        compose(car, _selector(3, 7, kind)),
        compose(car, _selector(4, 7, kind)),
        compose(car, _selector(5, 7, kind)),
        compose(car, _selector(6, 7, kind)),
    )
    # state now (x, b, u', val_w, w', nu, acc)
    h = F(1, 2**s)
    gate_row = [F(0), F(1), F(0), h, F(0), F(1), F(0)]
    rows = [
        [F(1), F(0), F(0), F(0), F(0), F(0), F(0)],
        [F(0), F(0), F(1), F(0), F(0), F(0), F(0)],
        [F(0), F(0), F(0), F(0), F(1), F(0), F(0)],
        [F(0), F(0), F(0), F(0), F(0), F(1), F(0)],
        [F(0), F(0), F(0), F(0), F(0), F(0), F(1)],
        gate_row,
    ]
    bias = [F(0)] * 5 + [-2 * h]
    out = [
        [F(1), F(0), F(0), F(0), F(0), F(0)],
        [F(0), F(1), F(0), F(0), F(0), F(0)],
        [F(0), F(0), F(1), F(0), F(0), F(0)],
        [F(0), F(0), F(0), F(1), F(0), F(0)],
        [F(0), F(0), F(0), F(0), F(1), F(1)],
    ]
    phase3 = Network(
        (7, 6, 5),
        (
            (_matrix(rows, kind), _vector(bias, kind)),
            (_matrix(out, kind), _vector([F(0)] * 5, kind)),
        ),
        kind,
    )
    return compose(phase3, compose(phase2, phase1))


def memorize_1d(xs, ys, N: int, L: int, s: int, r: int | None = None,
                kind: ScalarKind = RATIONAL, budget_slack: int = 1) -> Network:
    """Network with phi(x_j) = y_j exactly, zero off-sample.

    Positions must be 2^-s separated in [0, 1); labels are integers in
    {0, ..., 2^r - 1}.  The returned network is exact in rational mode
    (which requires L | s + r for the final scaling chain).
    """
    F = Fraction
    xs = [F(x) for x in xs]
    ys = [int(y) for y in ys]
    if len(xs) != len(ys) or not xs:
        raise ValueError("need equally many xs and ys, at least one")
    J = len(xs)
    if r is None:
        r = max(1, max(ys).bit_length())
    if any(not 0 <= y < 2**r for y in ys):
        raise ValueError(f"labels outside [0, 2^{r})")
    if any(not 0 <= x < 1 for x in xs):
        raise ValueError("positions must lie in [0, 1)")
    if J > 1 and _min_pairwise_gap(xs) < F(1, 2**s):
        raise ValueError(f"positions are not 2^-{s} separated")
    if J > budget_slack * N * N * L * L:
        raise ValueError(
            f"J={J} exceeds budget {budget_slack} * N^2 L^2 = "
            f"{budget_slack * N * N * L * L}"
        )

    n = max(1, int(math.log(N, 3) + 1e-9))
    denom = max(1.0, math.log2(N * L))
    L_prime = max(1, math.ceil(L * math.sqrt(n / denom)))
    M = math.ceil(J / L_prime)
    s_prime = s + 2
    c = max(r, s_prime)
    q = F(1, 2**s_prime)
    h = F(1, 2**s)

    order = sorted(range(J), key=lambda j: xs[j])
    xhats = [F(int(xs[j] * 2**s_prime), 2**s_prime) for j in order]
    labels = [ys[j] for j in order]

    groups, u_codes, w_codes = [], [], []
    for m in range(M):
        lo, hi = m * L_prime, min((m + 1) * L_prime, J)
        pos = xhats[lo:hi]
        lab = labels[lo:hi]
        pad = L_prime - (hi - lo)
        groups.append((pos[0], pos[-1]))
        u_codes.append(block_encode(pos + [F(0)] * pad, c).value)
        w_codes.append(
            block_encode([F(y, 2**r) for y in lab] + [F(0)] * pad, c).value
        )

    phi_u = pwl_net(_plateau_spec(groups, u_codes, q), RATIONAL)
    phi_w = pwl_net(_plateau_spec(groups, w_codes, q), RATIONAL)
    comb = pwl_net(_comb_spec(xhats, q, h), RATIONAL)

    init = parallelize_many(_carrier(RATIONAL), phi_u, phi_w, comb)
    pad_acc = affine_net(
        [[F(int(i == j)) for j in range(4)] for i in range(4)] + [[F(0)] * 4],
        [F(0)] * 5,
        RATIONAL,
    )
    net = compose(pad_acc, init)
    step = _iteration_block(c, n, s, RATIONAL)
    for _ in range(L_prime):
        net = compose(step, net)
    pick = affine_net([[F(0), F(0), F(0), F(0), F(1)]], [F(0)], RATIONAL)
    net = compose(pick, net)
    net = convert_network(net, kind)
    return compose(scaling_chain(s + r, L, kind), net)


def memorize_nd(instance: MemorizationInstance, N: int, L: int,
                rng_seed: int = 0, kind: ScalarKind = RATIONAL,
                budget_slack: int = 1) -> Network:
    """Project to 1-d through a verified separating direction, then fit.

    In rational mode the separation exponent s is rounded up until
    L | (s + r) so the scaling chain stays exact.  ``budget_slack``
    relaxes the sample-count check to J <= slack * N^2 L^2 for callers
    that absorb the constant elsewhere.
    """
    J, r = instance.count, instance.r
    if J > budget_slack * N * N * L * L:
        raise ValueError(
            f"J={J} exceeds budget {budget_slack} * N^2 L^2 = "
            f"{budget_slack * N * N * L * L}"
        )
    points = [x for x, _ in instance.samples]
    gap = None
    if instance.delta is not None:
        gap = instance.delta / (2 * J * J * instance.dim)
    proj = separating_direction(points, rng_seed=rng_seed, target_gap=gap)
    half = Fraction(1, 2)
    zs = [half + half * sum(c * t for c, t in zip(proj.u_tilde, x)) for x in points]
    if J > 1:
        zgap = _min_pairwise_gap(zs)
        s = max(1, math.ceil(-math.log2(zgap)))
        while Fraction(1, 2**s) > zgap:
            s += 1
    else:
        s = 1
    if kind.variant == "rational":
        while (s + r) % L:
            s += 1
    ys = [y for _, y in instance.samples]
    core = memorize_1d(zs, ys, N, L, s, r=r, kind=kind, budget_slack=budget_slack)
    project = affine_net([[c * half for c in proj.u_tilde]], [half], kind)
    return compose(core, project)


def proposition_budget(J: int, D: int, delta, N: int, L: int, s: int, r: int) -> dict:
    """Stated width/depth/weight budget (constants absorbed elsewhere)."""
    R = 2 * J * J * D / float(delta)
    log_n = max(1.0, math.log2(N))
    log_nl = max(1.0, math.log2(N * L))
    log_l = max(0.0, math.log2(L))
    depth = L + L * (math.sqrt(log_l) + (s + r) / math.sqrt(log_nl)) / math.sqrt(log_n)
    return {
        "width": N,
        "depth": depth,
        "B": N + 2 ** ((r + math.log2(R)) / L),
    }


def load_instance(doc: dict) -> MemorizationInstance:
    """Parse the instance JSON document {"D", "r", "samples": [{"x", "y"}]}."""
    try:
        D = int(doc["D"])
        r = int(doc["r"])
        samples = [
            (tuple(Fraction(t) for t in entry["x"]), int(entry["y"]))
            for entry in doc["samples"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc
    if any(len(x) != D for x, _ in samples):
        raise ValueError("sample dimension disagrees with D")
    return MemorizationInstance(tuple(samples), r)
