"""Ternary bit-stream encodings and digit-extraction networks.

A binary string theta_1, theta_2, ... is stored as the rational
sum_k theta_k 3^{-k}.  Because the digits are 0/1 while the base is 3, the
set of encodings sharing a j-digit prefix p occupies [p, p + 3^{-j}/2] and
distinct prefix classes are separated by at least 3^{-j}/2.  That gap lets a
piecewise-linear plateau function recover any digit exactly, which is what
the decode networks are built from.  No behavior is promised on inputs that
are not valid encodings.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .nets import (
    Network,
    _matrix,
    _vector,
    affine_net,
    compose,
    identity_net,
    parallelize_many,
)
from .pwl import PwlSpec, pwl_net
from .scalars import RATIONAL, ScalarKind, to_scalar

__all__ = [
    "BitStream",
    "BlockCode",
    "ternary_encode",
    "ternary_digits",
    "binary_digits",
    "block_encode",
    "digit_spec",
    "prefix_spec",
    "bit_sum_net",
    "bit_decode_net",
]


@dataclass(frozen=True)
class BitStream:
    """A finite 0/1 string with an implicit zero tail."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)


def ternary_encode(bits) -> Fraction:
    """sum_k theta_k 3^{-k} as an exact rational."""
    if isinstance(bits, BitStream):
        bits = bits.bits
    acc = Fraction(0)
    for k, b in enumerate(bits, start=1):
        if b not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        if b:
            acc += Fraction(1, 3**k)
    return acc


def ternary_digits(x, count: int) -> tuple:
    """First ``count`` digits of a valid ternary 0/1 encoding (oracle)."""
    x = Fraction(x)
    out = []
    for _ in range(count):
        x *= 3
        d = int(x)  # tail of a valid encoding stays <= 1/2, so d is 0 or 1
        if d not in (0, 1):
            raise ValueError("not a valid 0/1 ternary encoding")
        out.append(d)
        x -= d
    return tuple(out)


def binary_digits(value, count: int) -> tuple:
    """First ``count`` binary digits of value in [0, 1)."""
    v = Fraction(value)
    if not 0 <= v < 1:
        raise ValueError(f"value {value} outside [0, 1)")
    out = []
    for _ in range(count):
        v *= 2
        d = int(v)
        out.append(d)
        v -= d
    return tuple(out)


@dataclass(frozen=True)
class BlockCode:
    """c binary digits of each of L' values packed into one ternary rational:
    value = sum_j sum_i b_{j,i} 3^{-((j-1)c + i)}."""

    value: Fraction
    c: int
    blocks: int


def block_encode(values, c: int, precision: int | None = None) -> BlockCode:
    """Pack the first ``c`` binary digits of each value, block by block.

    With ``precision`` given, each value must be a multiple of 2^-precision
    (so no digits are silently dropped when precision <= c).
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    values = list(values)
    acc = Fraction(0)
    for j, v in enumerate(values):
        v = Fraction(v)
        if precision is not None and (v * 2**precision).denominator != 1:
            raise ValueError(f"value {v} is not a multiple of 2^-{precision}")
        digits = binary_digits(v, c)
        for i, b in enumerate(digits, start=1):
            if b:
                acc += Fraction(1, 3 ** (j * c + i))
    return BlockCode(acc, c, len(values))


def _prefixes(n: int):
    """All 2^n ternary prefix values with their digit strings, ascending."""
    out = []
    for mask in range(2**n):
        bits = tuple((mask >> (n - 1 - k)) & 1 for k in range(n))
        out.append((ternary_encode(bits), bits))
    out.sort()
    return out


def digit_spec(j: int) -> PwlSpec:
    """Plateau interpolant extracting digit j from a valid encoding."""
    half = Fraction(1, 2 * 3**j)
    pts = []
    for p, bits in _prefixes(j):
        y = Fraction(bits[j - 1])
        pts.append((p, y))
        pts.append((p + half, y))
    return PwlSpec(tuple(pts))


def prefix_spec(n: int) -> PwlSpec:
    """Plateau interpolant mapping a valid encoding to its n-digit prefix."""
    half = Fraction(1, 2 * 3**n)
    pts = []
    for p, _ in _prefixes(n):
        pts.append((p, p))
        pts.append((p + half, p))
    return PwlSpec(tuple(pts))


def _step_indicator(j: int) -> PwlSpec:
    """0 for i <= j-1, 1 for i >= j, linear between (exact at integers)."""
    return PwlSpec(((Fraction(j - 1), 0), (Fraction(j), 1)))


def bit_sum_net(n: int, kind: ScalarKind = RATIONAL) -> Network:
    """Two-input network (x, i) -> (sum_{j<=min(i,n)} theta_j, tail after n).

    ``x`` must be a valid ternary 0/1 encoding and ``i`` a nonnegative
    integer; both outputs are then exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    F = Fraction
    sel_x = affine_net([[F(1), F(0)]], [F(0)], kind)
    sel_i = affine_net([[F(0), F(1)]], [F(0)], kind)
    branches = [compose(pwl_net(digit_spec(j), kind), sel_x) for j in range(1, n + 1)]
    branches.append(compose(pwl_net(prefix_spec(n), kind), sel_x))
    branches.append(compose(identity_net(1, kind), sel_x))  # raw x for the tail
    branches += [
        compose(pwl_net(_step_indicator(j), kind), sel_i) for j in range(1, n + 1)
    ]
    stage_a = parallelize_many(*branches)
    # stage_a output: (theta_1..theta_n, prefix, x, c_1..c_n)

    # stage B hidden: relu(theta_j + c_j - 1) for each j, then a +- pair
    # carrying the tail 3^n (x - prefix)
    d = 2 * n + 2
    three_n = F(3**n)
    rows, bias = [], []
    for j in range(n):
        row = [F(0)] * d
        row[j] = F(1)
        row[n + 2 + j] = F(1)
        rows.append(row)
        bias.append(F(-1))
    for sign in (1, -1):
        row = [F(0)] * d
        row[n] = -sign * three_n
        row[n + 1] = sign * three_n
        rows.append(row)
        bias.append(F(0))
    out = [
        [F(1)] * n + [F(0), F(0)],
        [F(0)] * n + [F(1), F(-1)],
    ]
    stage_b = Network(
        (d, n + 2, 2),
        (
            (_matrix(rows, kind), _vector(bias, kind)),
            (_matrix(out, kind), _vector([F(0), F(0)], kind)),
        ),
        kind,
    )
    return compose(stage_b, stage_a)


def _decode_block(n_step: int, offset: int, kind: ScalarKind) -> Network:
    """Depth-1 block (y, x) -> (y + sum_j theta_j 2^{-(offset+j)}, tail)."""
    F = Fraction
    sel_y = affine_net([[F(1), F(0)]], [F(0)], kind)
    sel_x = affine_net([[F(0), F(1)]], [F(0)], kind)
    branches = [compose(identity_net(1, kind), sel_y)]
    branches += [
        compose(pwl_net(digit_spec(j), kind), sel_x) for j in range(1, n_step + 1)
    ]
    branches.append(compose(pwl_net(prefix_spec(n_step), kind), sel_x))
    branches.append(compose(identity_net(1, kind), sel_x))
    core = parallelize_many(*branches)

    three = F(3**n_step)
    mix = [
        [F(1)] + [F(1, 2 ** (offset + j)) for j in range(1, n_step + 1)] + [F(0), F(0)],
        [F(0)] * (n_step + 1) + [-three, three],
    ]
    post = affine_net(mix, [F(0), F(0)], kind)
    return compose(post, core)


def bit_decode_net(n: int, ell: int, kind: ScalarKind = RATIONAL) -> Network:
    """Map a ternary encoding to (sum_{j<=ell} theta_j 2^{-j}, tail encoding).

    Built as ceil(ell/n) composed depth-1 blocks, n digits per block (the
    last block takes the remainder).  Input is (x,); the running binary
    accumulator is threaded through a second coordinate internally.
    """
    if n < 1 or ell < 1:
        raise ValueError("n and ell must be >= 1")
    F = Fraction
    # seed the (y, x) state from x alone
    net = affine_net([[F(0)], [F(1)]], [F(0), F(0)], kind)
    done = 0
    while done < ell:
        step = min(n, ell - done)
        net = compose(_decode_block(step, done, kind), net)
        done += step
    return net
