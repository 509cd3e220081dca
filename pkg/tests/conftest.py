import random
from fractions import Fraction

import pytest

from relukit import F64, RATIONAL, Network, ScalarKind
from relukit.nets import _matrix, _vector


def random_network(rng: random.Random, kind=F64, max_width=6, max_depth=4,
                   d_in=None, d_out=None) -> Network:
    """A random dense ReLU network with small rational weights."""
    depth = rng.randint(0, max_depth)
    dims = [d_in or rng.randint(1, max_width)]
    for _ in range(depth):
        dims.append(rng.randint(1, max_width))
    dims.append(d_out or rng.randint(1, max_width))
    layers = []
    for i in range(len(dims) - 1):
        W = [
            [Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(dims[i])]
            for _ in range(dims[i + 1])
        ]
        v = [Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(dims[i + 1])]
        layers.append((_matrix(W, kind), _vector(v, kind)))
    return Network(tuple(dims), tuple(layers), kind)


def random_input(rng: random.Random, dim: int, kind=F64):
    xs = [Fraction(rng.randint(-12, 12), rng.randint(1, 8)) for _ in range(dim)]
    if kind == RATIONAL:
        return xs
    return [float(x) for x in xs]


def oracle_forward(net: Network, x):
    """Straight-line matrix recursion, independent of relukit.evaluate."""
    state = list(x)
    n_layers = len(net.layers)
    for idx in range(n_layers):
        W, v = net.layers[idx]
        nxt = []
        for row, b in zip(W, v):
            acc = b
            for w, t in zip(row, state):
                acc = acc + w * t
            nxt.append(acc)
        if idx < n_layers - 1:
            nxt = [t if t > 0 else 0 * t for t in nxt]
        state = nxt
    return state


@pytest.fixture
def rng():
    return random.Random(12345)
