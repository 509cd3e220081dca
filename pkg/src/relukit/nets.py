"""Explicit layered ReLU networks: data model, evaluator, combinators.

A network with ``L`` hidden layers is stored as ``L + 1`` affine maps
``(W_i, v_i)``; ReLU is applied after every affine map except the last.
Depth-0 networks (a single affine map) are permitted as a degenerate case.

Weights are plain Python objects (float, Fraction, or gmpy2.mpfr) chosen by
the network's :class:`~relukit.scalars.ScalarKind`.  Networks are immutable
after construction; evaluation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .scalars import (
    ScalarKind,
    is_finite,
    scalar_context,
    scalar_from_str,
    scalar_to_str,
    to_scalar,
)

__all__ = [
    "Network",
    "SizeReport",
    "SerializationError",
    "evaluate",
    "identity_net",
    "depth_align",
    "parallelize",
    "parallelize_many",
    "compose",
    "compose_many",
    "affine_net",
    "scaling_chain",
    "size_report",
    "serialize",
    "deserialize",
    "convert_network",
]


class SerializationError(ValueError):
    """Malformed network document."""


@dataclass(frozen=True, eq=False)
class Network:
    """A fully connected ReLU network.

    ``dims`` holds the layer widths (N_0, ..., N_{L+1}); ``layers`` holds the
    affine maps as (weight-matrix, bias-vector) pairs with row-major
    tuple-of-tuples matrices.
    """

    dims: tuple
    layers: tuple
    scalar_kind: ScalarKind

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise ValueError("network needs input and output dims")
        if len(self.layers) != len(dims) - 1:
            raise ValueError("layer count inconsistent with dims")
        for i, (W, v) in enumerate(self.layers):
            n_out, n_in = dims[i + 1], dims[i]
            if len(W) != n_out or len(v) != n_out:
                raise ValueError(f"layer {i}: expected {n_out} rows")
            for row in W:
                if len(row) != n_in:
                    raise ValueError(f"layer {i}: expected {n_in} columns")
        object.__setattr__(self, "_cache", {})

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.layers) - 1

    def __call__(self, x):
        return evaluate(self, x)

    # -- cached evaluation structures ------------------------------------

    def _f64_layers(self):
        cached = self._cache.get("f64")
        if cached is None:
            cached = [
                (np.asarray(W, dtype=float), np.asarray(v, dtype=float))
                for W, v in self.layers
            ]
            self._cache["f64"] = cached
        return cached

    def _sparse_layers(self):
        """Per-layer (rows, bias) with rows as [(col, weight), ...] lists,
        zero entries skipped."""
        cached = self._cache.get("sparse")
        if cached is None:
            cached = []
            for W, v in self.layers:
                rows = [
                    [(j, w) for j, w in enumerate(row) if w != 0] for row in W
                ]
                cached.append((rows, v))
            self._cache["sparse"] = cached
        return cached


@dataclass(frozen=True)
class SizeReport:
    """Width N, depth L, max parameter magnitude B, parameter count."""

    width: int
    depth: int
    max_magnitude: object
    param_count: int


# ---------------------------------------------------------------------------
# evaluation


def evaluate(net: Network, x):
    """Exact forward pass; ReLU after every hidden affine map only.

    ``x`` is a sequence of scalars of length ``net.input_dim``; returns a
    list (or ndarray in f64 mode) of length ``net.output_dim``.
    """
    if len(x) != net.input_dim:
        raise ValueError(f"input dim {len(x)} != {net.input_dim}")
    if net.scalar_kind.variant == "f64":
        return _evaluate_f64(net, x)
    return _evaluate_generic(net, x)


def _evaluate_f64(net: Network, x):
    state = np.asarray([float(t) for t in x], dtype=float)
    layers = net._f64_layers()
    last = len(layers) - 1
    for i, (W, v) in enumerate(layers):
        state = W @ state + v
        if i < last:
            state = np.maximum(state, 0.0)
    if not np.all(np.isfinite(state)):
        raise ArithmeticError("non-finite value in forward pass")
    return state


def _evaluate_generic(net: Network, x):
    kind = net.scalar_kind
    with scalar_context(kind):
        state = [to_scalar(t, kind) for t in x]
        zero = to_scalar(0, kind)
        layers = net._sparse_layers()
        last = len(layers) - 1
        for i, (rows, bias) in enumerate(layers):
            new = []
            for row, b in zip(rows, bias):
                acc = b
                for j, w in row:
                    acc = acc + w * state[j]
                if i < last and acc < 0:
                    acc = zero
                new.append(acc)
            state = new
        if kind.variant == "bigfloat" and not all(is_finite(t) for t in state):
            raise ArithmeticError("non-finite value in forward pass")
        return state


# ---------------------------------------------------------------------------
# construction helpers


def _matrix(rows, kind: ScalarKind):
    return tuple(tuple(to_scalar(w, kind) for w in row) for row in rows)


def _vector(entries, kind: ScalarKind):
    return tuple(to_scalar(w, kind) for w in entries)


def _zeros(n_out, n_in, kind):
    z = to_scalar(0, kind)
    row = (z,) * n_in
    return tuple(row for _ in range(n_out))


def _mat_mul(A, B, kind):
    """A @ B for tuple matrices, skipping zero entries of A."""
    zero = to_scalar(0, kind)
    n_in = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [zero] * n_in
        for k, a in enumerate(row):
            if a == 0:
                continue
            brow = B[k]
            for j, b in enumerate(brow):
                if b != 0:
                    acc[j] = acc[j] + a * b
        out.append(tuple(acc))
    return tuple(out)


def _mat_vec(A, x, kind):
    zero = to_scalar(0, kind)
    out = []
    for row in A:
        acc = zero
        for a, t in zip(row, x):
            if a != 0 and t != 0:
                acc = acc + a * t
        out.append(acc)
    return tuple(out)


def _vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def affine_net(A, b, kind: ScalarKind = ScalarKind.f64()) -> Network:
    """Depth-0 network computing ``A x + b`` exactly."""
    with scalar_context(kind):
        W = _matrix(A, kind)
        v = _vector(b, kind)
    if len(W) != len(v):
        raise ValueError("A/b shape mismatch")
    n_in = len(W[0]) if W else 0
    return Network((n_in, len(W)), ((W, v),), kind)


def identity_net(D: int, kind: ScalarKind = ScalarKind.f64()) -> Network:
    """Width-2D, depth-1 network computing x -> x on all of R^D
    via x = relu(x) - relu(-x)."""
    if D < 1:
        raise ValueError("D must be >= 1")
    with scalar_context(kind):
        one = to_scalar(1, kind)
        zero = to_scalar(0, kind)
        W0 = []
        for j in range(D):
            W0.append(tuple(one if k == j else zero for k in range(D)))
        for j in range(D):
            W0.append(tuple(-one if k == j else zero for k in range(D)))
        W1 = []
        for j in range(D):
            row = [zero] * (2 * D)
            row[j] = one
            row[D + j] = -one
            W1.append(tuple(row))
        zD = (zero,) * D
        z2D = (zero,) * (2 * D)
    return Network((D, 2 * D, D), ((tuple(W0), z2D), (tuple(W1), zD)), kind)


def compose(f: Network, g: Network) -> Network:
    """Network computing f(g(x)).

    The output affine map of g and the input affine map of f are merged into
    one affine map, so depth(f o g) = depth(f) + depth(g).
    """
    if f.input_dim != g.output_dim:
        raise ValueError(
            f"compose: f expects dim {f.input_dim}, g outputs {g.output_dim}"
        )
    if f.scalar_kind != g.scalar_kind:
        raise ValueError("compose: scalar kinds differ")
    kind = f.scalar_kind
    with scalar_context(kind):
        Wg, vg = g.layers[-1]
        Wf, vf = f.layers[0]
        W = _mat_mul(Wf, Wg, kind)
        v = _vec_add(_mat_vec(Wf, vg, kind), vf)
    dims = g.dims[:-1] + f.dims[1:]
    layers = g.layers[:-1] + ((W, v),) + f.layers[1:]
    return Network(dims, layers, kind)


def compose_many(*nets: Network) -> Network:
    """compose(f, g, h, ...) applied right to left: returns f o g o h o ..."""
    out = nets[-1]
    for f in reversed(nets[:-1]):
        out = compose(f, out)
    return out


def depth_align(net: Network, target_depth: int) -> Network:
    """Pad ``net`` with identity layers on top until it has the given depth."""
    if target_depth < net.depth:
        raise ValueError(f"target depth {target_depth} < {net.depth}")
    out = net
    ident = None
    while out.depth < target_depth:
        if ident is None:
            ident = identity_net(net.output_dim, net.scalar_kind)
        out = compose(ident, out)
    return out


def parallelize(f: Network, g: Network) -> Network:
    """Network computing x -> (f(x), g(x)); depths are aligned internally."""
    if f.input_dim != g.input_dim:
        raise ValueError("parallelize: input dims differ")
    if f.scalar_kind != g.scalar_kind:
        raise ValueError("parallelize: scalar kinds differ")
    kind = f.scalar_kind
    depth = max(f.depth, g.depth)
    f = depth_align(f, depth)
    g = depth_align(g, depth)
    layers = []
    with scalar_context(kind):
        for i in range(depth + 1):
            Wf, vf = f.layers[i]
            Wg, vg = g.layers[i]
            if i == 0:
                # shared input columns: stack vertically
                W = Wf + Wg
            else:
                nf_in, ng_in = f.dims[i], g.dims[i]
                zf = (to_scalar(0, kind),) * ng_in
                zg = (to_scalar(0, kind),) * nf_in
                W = tuple(row + zf for row in Wf) + tuple(zg + row for row in Wg)
            layers.append((W, vf + vg))
    dims = (f.input_dim,) + tuple(
        a + b for a, b in zip(f.dims[1:], g.dims[1:])
    )
    return Network(dims, tuple(layers), kind)


def parallelize_many(*nets: Network) -> Network:
    """Left fold of :func:`parallelize` over two or more networks."""
    out = nets[0]
    for g in nets[1:]:
        out = parallelize(out, g)
    return out


def scaling_chain(s_plus_r: int, L: int, kind: ScalarKind = ScalarKind.f64()) -> Network:
    """Depth-L network computing x -> 2**s_plus_r * x for x >= 0.

    Realized as the L-fold iteration of x -> 2**(s_plus_r/L) * x, so each
    layer's weight magnitude is 2**(s_plus_r/L).  Exact in rational mode only
    when L divides s_plus_r.
    """
    if s_plus_r < 0 or L < 1:
        raise ValueError("need s_plus_r >= 0 and L >= 1")
    from .scalars import two_pow

    with scalar_context(kind):
        c = two_pow(s_plus_r, L, kind)
        zero = to_scalar(0, kind)
        one = to_scalar(1, kind)
        layers = [(((c,),), (zero,)) for _ in range(L)] + [(((one,),), (zero,))]
    return Network((1,) * (L + 2), tuple(layers), kind)


def size_report(net: Network) -> SizeReport:
    """Width, depth, max parameter magnitude B, and parameter count."""
    width = max(net.dims)
    b = None
    count = 0
    for W, v in net.layers:
        count += len(W) * (len(W[0]) if W else 0) + len(v)
        for row in W:
            for w in row:
                a = abs(w)
                if b is None or a > b:
                    b = a
        for w in v:
            a = abs(w)
            if b is None or a > b:
                b = a
    return SizeReport(width, net.depth, b, count)


def convert_network(net: Network, kind: ScalarKind) -> Network:
    """Reinterpret all weights in another scalar kind (rounding if inexact)."""
    if net.scalar_kind == kind:
        return net
    with scalar_context(kind):
        layers = tuple(
            (_matrix(W, kind), _vector(v, kind)) for W, v in net.layers
        )
    return Network(net.dims, layers, kind)


# ---------------------------------------------------------------------------
# serialization


def serialize(net: Network) -> dict:
    """JSON-ready document; weights as strings per the scalar kind."""
    kind = net.scalar_kind
    return {
        "scalar": kind.tag(),
        "dims": list(net.dims),
        "layers": [
            {
                "W": [[scalar_to_str(w, kind) for w in row] for row in W],
                "v": [scalar_to_str(w, kind) for w in v],
            }
            for W, v in net.layers
        ],
    }


def deserialize(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise SerializationError("document must be an object")
    try:
        kind = ScalarKind.from_tag(doc["scalar"])
        dims = [int(d) for d in doc["dims"]]
        raw_layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"malformed document: {exc}") from exc
    if len(dims) < 2 or not isinstance(raw_layers, list):
        raise SerializationError("bad dims/layers")
    layers = []
    with scalar_context(kind):
        for entry in raw_layers:
            try:
                W = tuple(
                    tuple(scalar_from_str(w, kind) for w in row)
                    for row in entry["W"]
                )
                v = tuple(scalar_from_str(w, kind) for w in entry["v"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SerializationError(f"unparsable layer: {exc}") from exc
            layers.append((W, v))
    try:
        return Network(tuple(dims), tuple(layers), kind)
    except ValueError as exc:
        raise SerializationError(str(exc)) from exc
