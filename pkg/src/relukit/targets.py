"""Smooth test targets with derivative oracles, and grid-cell discovery.

A target bundles the function, its partial derivatives up to the Taylor
order, and a sampler of the (possibly low-dimensional) domain subset the
approximation is measured on.  Derivative oracles are cross-checked against
finite differences at construction time.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

__all__ = [
    "HolderTarget",
    "GridPartition",
    "multi_indices",
    "sine_curve_target",
    "poly_target_1d",
    "constant_target",
    "bump_target",
]

FD_TOL = 1e-4
FD_PROBES = 12


def multi_indices(D: int, max_order: int):
    """All alpha in N^D with |alpha|_1 <= max_order, lexicographic."""
    out = []
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=D):
            if sum(alpha) == total:
                out.append(alpha)
    return out


def _fd_partial(f, x, alpha, h=1e-5):
    """Central finite difference of order alpha (orders <= 2 supported)."""
    order = sum(alpha)
    if order == 0:
        return f(x)
    axis = next(i for i, a in enumerate(alpha) if a > 0)
    lower = tuple(a - (1 if i == axis else 0) for i, a in enumerate(alpha))

    def g(y):
        return _fd_partial(f, y, lower, h)

    up = list(x)
    dn = list(x)
    up[axis] += h
    dn[axis] -= h
    return (g(up) - g(dn)) / (2 * h)


@dataclass(frozen=True)
class HolderTarget:
    """Smoothness-s target on [0,1]^D with derivative oracles and a sampler.

    ``partials`` maps each multi-index alpha with |alpha| <= floor(s) to an
    oracle for the corresponding partial derivative; ``sampler(rng, n)``
    yields points of the measured subset M.
    """

    D: int
    s: float
    C: float
    f: object
    partials: dict
    sampler: object
    name: str = "custom"
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.s <= 0 or self.C <= 0 or self.D < 1:
            raise ValueError("need s > 0, C > 0, D >= 1")
        order = int(self.s)
        for alpha in multi_indices(self.D, order):
            if alpha not in self.partials:
                raise ValueError(f"missing derivative oracle for alpha={alpha}")
        if self.validate:
            self._check_consistency()

    def _check_consistency(self):
        rng = random.Random(4242)
        for alpha in multi_indices(self.D, int(self.s)):
            if sum(alpha) == 0:
                continue
            scale = max(1.0, self.C)
            for _ in range(FD_PROBES):
                # stay clear of the boundary so central stencils fit
                x = [rng.uniform(0.1, 0.9) for _ in range(self.D)]
                got = float(self.partials[alpha](x))
                want = _fd_partial(lambda y: float(self.f(y)), x, alpha)
                if abs(got - want) > FD_TOL * scale * max(1.0, abs(want)):
                    raise ValueError(
                        f"derivative oracle for alpha={alpha} disagrees with "
                        f"finite differences at {x}: {got} vs {want}"
                    )

    def taylor_order(self) -> int:
        return int(self.s)

    def sample(self, rng, n: int):
        return self.sampler(rng, n)


@dataclass(frozen=True)
class GridPartition:
    """Resolution-K grid with the set of cell indices that meet M."""

    K: int
    occupied: frozenset

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        for beta in self.occupied:
            if any(not 0 <= b < self.K for b in beta):
                raise ValueError(f"cell index {beta} out of range")

    @staticmethod
    def cell_of(x, K: int) -> tuple:
        return tuple(min(K - 1, int(math.floor(float(t) * K))) for t in x)

    @staticmethod
    def discover(target: HolderTarget, K: int, n_samples: int = 10**6,
                 seed: int = 0) -> "GridPartition":
        """Estimate occupied cells by sampling M; under-discovery only
        shrinks the verified region."""
        rng = random.Random(seed)
        occupied = set()
        for x in target.sample(rng, n_samples):
            occupied.add(GridPartition.cell_of(x, K))
        return GridPartition(K, frozenset(occupied))

    def corner(self, beta) -> tuple:
        return tuple(Fraction(b, self.K) for b in beta)


def _curve_point(t: float) -> tuple:
    """Arc in [0,1]^3 parameterized by t in [0,1], first coordinate = t."""
    return (t, 0.5 + 0.4 * math.sin(math.pi * t), 0.5 + 0.4 * t * (1 - t))


def sine_curve_target(s: float = 1.0, freq: int = 1) -> HolderTarget:
    """f(x) = (1 + sin(2 pi freq x_1))/4 on [0,1]^3, measured on a 1-d arc.

    The range offset keeps f nonnegative; all partials act on x_1 only.
    """
    w = 2 * math.pi * freq
    amp = 0.25

    def f(x):
        return amp * (1.0 + math.sin(w * float(x[0])))

    def deriv(order):
        def g(x, order=order):
            # d/dx cycle: sin -> cos -> -sin -> -cos
            phase = w * float(x[0]) + order * math.pi / 2
            return amp * w**order * math.sin(phase)

        return g

    partials = {}
    for alpha in multi_indices(3, int(s)):
        k = alpha[0]
        if sum(alpha) == k:
            partials[alpha] = f if k == 0 else deriv(k)
        else:
            partials[alpha] = lambda x: 0.0

    def sampler(rng, n):
        return [_curve_point(rng.random()) for _ in range(n)]

    C = max(1.0, amp * w ** (int(s) + 1))
    return HolderTarget(3, s, C, f, partials, sampler, name=f"sine-curve-s{s}")


def poly_target_1d(coeffs, s: float = 2.0) -> HolderTarget:
    """Polynomial target on [0,1] with exact derivative oracles."""
    coeffs = [float(c) for c in coeffs]

    def derive(cs, times):
        for _ in range(times):
            cs = [k * c for k, c in enumerate(cs)][1:] or [0.0]
        return cs

    def horner(cs, t):
        acc = 0.0
        for c in reversed(cs):
            acc = acc * t + c
        return acc

    partials = {}
    for alpha in multi_indices(1, int(s)):
        cs = derive(coeffs, alpha[0])
        partials[alpha] = lambda x, cs=cs: horner(cs, float(x[0]))

    def sampler(rng, n):
        return [(rng.random(),) for _ in range(n)]

    C = max(1.0, sum(abs(c) for c in coeffs) * math.factorial(int(s) + 1))
    return HolderTarget(1, s, C, partials[(0,)], partials, sampler, name="poly-1d")


def constant_target(value: float, D: int = 1, s: float = 1.0) -> HolderTarget:
    partials = {}
    for alpha in multi_indices(D, int(s)):
        if sum(alpha) == 0:
            partials[alpha] = lambda x, v=value: v
        else:
            partials[alpha] = lambda x: 0.0

    def sampler(rng, n):
        return [tuple(rng.random() for _ in range(D)) for _ in range(n)]

    return HolderTarget(D, s, max(1.0, abs(value)), partials[(0,) * D], partials,
                        sampler, name="constant")


def _bump_1d(u: float, p: float, order: int) -> float:
    """g(u) = (u(1-u))^p on [0,1] (0 outside) and derivatives to order 2."""
    if not 0.0 < u < 1.0:
        return 0.0
    base = u * (1.0 - u)
    if order == 0:
        return base**p
    if order == 1:
        return p * base ** (p - 1) * (1.0 - 2.0 * u)
    if order == 2:
        return (
            p * (p - 1) * base ** (p - 2) * (1.0 - 2.0 * u) ** 2
            - 2.0 * p * base ** (p - 1)
        )
    raise ValueError("bump derivatives implemented up to order 2")


def bump_target(sigma, K: int, s: float = 2.0, a: float = 1.0,
                D: int = 1) -> HolderTarget:
    """Sum of rescaled polynomial bumps a K^-s prod (u(1-u))^(s+1) over the
    cells flagged by sigma (map beta -> {0,1}); disjoint supports add."""
    support = sorted(beta for beta, on in sigma.items() if on)
    for beta in support:
        if len(beta) != D or any(not 0 <= b < K for b in beta):
            raise ValueError(f"bad support cell {beta}")
    p = s + 1
    scale = a * K ** (-s)

    def partial(alpha):
        def g(x):
            total = 0.0
            for beta in support:
                us = [float(t) * K - b for t, b in zip(x, beta)]
                if any(not 0.0 < u < 1.0 for u in us):
                    continue
                term = scale
                for u, k in zip(us, alpha):
                    term *= _bump_1d(u, p, k) * K**k  # chain rule per axis
                total += term
            return total

        return g

    order = int(s)
    partials = {alpha: partial(alpha) for alpha in multi_indices(D, order)}

    def sampler(rng, n):
        return [tuple(rng.random() for _ in range(D)) for _ in range(n)]

    C = max(1.0, abs(a) * (4.0 * K) ** order)
    return HolderTarget(D, s, C, partials[(0,) * D], partials, sampler,
                        name="bump", validate=False)
