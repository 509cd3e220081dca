"""Smoothness-adaptive approximation on low-dimensional subsets.

The pipeline snaps inputs to a grid whose resolution is tuned to the
intrinsic dimension of the measured subset, recalls quantized Taylor
coefficients of the target at the snapped corner through point-fitting
networks, evaluates the Taylor monomials by iterated sawtooth squaring,
and combines coefficient and monomial through an approximate product.

``holder_approx`` builds a structured object whose components are real
networks; the fully assembled single network is available at small
budgets via :meth:`HolderApprox.network`, while parameter sweeps use the
structured evaluator (the label tables it reads are spot-checked against
rational evaluation of the point-fitting networks).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .geometry import PointCloud, minkowski_slope
from .memorize import MemorizationInstance, _carrier, _selector, memorize_nd
from .nets import (
    Network,
    affine_net,
    compose,
    compose_many,
    convert_network,
    evaluate,
    identity_net,
    parallelize,
    parallelize_many,
    size_report,
)
from .pwl import PwlSpec, SmoothingConfig, in_band, median_smooth, pwl_net
from .scalars import F64, RATIONAL, ScalarKind
from .targets import GridPartition, HolderTarget, multi_indices

__all__ = [
    "step_net",
    "grid_snap_net",
    "monomial_net",
    "product_net",
    "monomial_error_bound",
    "taylor_coeffs",
    "ApproxReport",
    "HolderApprox",
    "holder_approx",
    "holder_approx_net",
    "estimate_dimension",
    "load_target",
]

MONOLITH_WIDTH_LIMIT = 20000


def _staircase_spec(Kp: int, band: Fraction) -> PwlSpec:
    """floor(Kp x)/Kp away from the bands (k/Kp - band, k/Kp)."""
    pts = []
    for k in range(Kp):
        pts.append((Fraction(k, Kp), Fraction(k, Kp)))
        if k < Kp - 1:
            pts.append((Fraction(k + 1, Kp) - band, Fraction(k, Kp)))
    return PwlSpec(tuple(pts))


def step_net(K: int, N: int, L: int, r: int = 1,
             kind: ScalarKind = RATIONAL) -> Network:
    """Depth-2 network equal to floor(K x)/K outside the snapping bands.

    The bands are the intervals (k/K - delta, k/K) with delta = 1/(4 K^r);
    there the output interpolates between plateaus.  The resolution is
    reached by composing two coarse staircases of K' = sqrt(K) steps each,
    so the width stays ~2 sqrt(K) instead of ~K.
    """
    Kp = math.isqrt(K)
    if Kp * Kp != K:
        raise ValueError(f"K={K} must be a perfect square")
    if r < 1:
        raise ValueError("band exponent r must be >= 1")
    if Kp > max(2, N * L):
        raise ValueError(f"sqrt(K)={Kp} exceeds the width-depth budget N L")
    F = Fraction
    band = F(1, 4 * K**r)
    psi = pwl_net(_staircase_spec(Kp, band), kind)
    # (x, psi(x)) -> (psi, y = K'(x - psi)); then psi(y)/K' refines
    stage1 = parallelize(identity_net(1, kind), psi)
    mid = affine_net([[F(0), F(1)], [F(Kp), F(-Kp)]], [F(0), F(0)], kind)
    stage2 = parallelize(
        compose(_carrier(kind), _selector(0, 2, kind)),
        compose(psi, _selector(1, 2, kind)),
    )
    out = affine_net([[F(1), F(1, Kp)]], [F(0)], kind)
    return compose_many(out, stage2, mid, stage1)


def grid_snap_net(K: int, D: int, N: int, L: int, delta,
                  kind: ScalarKind = RATIONAL) -> Network:
    """Coordinate-wise snap x -> floor(K x)/K, exact whenever every
    coordinate is at distance >= delta below the next grid line."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    r = 1
    while Fraction(1, 4 * K**r) > delta:
        r += 1
        if r > 30:
            raise ValueError("band narrower than 1/(4 K^30) not supported")
    step = step_net(K, N, L, r, kind)
    branches = [compose(step, _selector(j, D, kind)) for j in range(D)]
    return parallelize_many(*branches)


def _tent_iterates(x: Fraction, times: int) -> Fraction:
    for _ in range(times):
        x = 2 * x if 2 * x <= 1 else 2 - 2 * x
    return x


def _saw_spec(t: int) -> PwlSpec:
    """t-fold tent iterate: 2^t + 1 breakpoints (i/2^t, i mod 2)."""
    return PwlSpec(tuple((Fraction(i, 2**t), Fraction(i % 2)) for i in range(2**t + 1)))


def _partial_sum_spec(t: int, offset: int) -> PwlSpec:
    """sum_{j=1}^{t} g^(offset+j)(x) / 4^(offset+j) restricted to one stage,
    where g^(offset) has already been applied to the stage input."""
    pts = []
    for i in range(2**t + 1):
        x = Fraction(i, 2**t)
        val = sum(
            Fraction(_tent_iterates(x, j), 4**(offset + j)) for j in range(1, t + 1)
        )
        pts.append((x, val))
    return PwlSpec(tuple(pts))


def _square_net(T: int, t: int, kind: ScalarKind) -> Network:
    """x -> x^2 - tail on [0,1] with 0 <= tail <= 4^-T / 3.

    Truncates x^2 = x - sum_j g^(j)(x)/4^j after T sawtooth terms,
    grouping t terms per stage so the stage width stays ~2^t."""
    F = Fraction
    init = affine_net([[F(1)], [F(1)], [F(0)]], [F(0)] * 3, kind)
    net = init
    done = 0
    while done < T:
        tm = min(t, T - done)
        sel = lambda i: _selector(i, 3, kind)
        stage = parallelize_many(
            compose(identity_net(1, kind), sel(0)),
            compose(pwl_net(_saw_spec(tm), kind), sel(1)),
            compose(pwl_net(_partial_sum_spec(tm, done), kind), sel(1)),
            compose(_carrier(kind), sel(2)),
        )
        merge = affine_net(
            [[F(1), F(0), F(0), F(0)],
             [F(0), F(1), F(0), F(0)],
             [F(0), F(0), F(1), F(1)]],
            [F(0)] * 3,
            kind,
        )
        net = compose(merge, compose(stage, net))
        done += tm
    out = affine_net([[F(1), F(0), F(-1)]], [F(0)], kind)
    return compose(out, net)


def _squaring_teeth(k: int, N: int, L: int) -> tuple:
    """Total tooth count T and teeth-per-stage t for a degree-k monomial."""
    T = math.ceil(7 * k * L * math.log2(N + 1) / 2) + 1
    t = max(1, int(math.log2(N + 1)))
    return T, t


def product_net(N: int, L: int, kind: ScalarKind = RATIONAL,
                degree: int = 2) -> Network:
    """(a, b) -> approximately a b on [0,1]^2 via the polarization
    x y = sq((x+y)/2) - sq((x-y+1)/2) + (x-y+1)/2 - 1/4.

    ``degree`` sets the truncation so the error fits the budget of a
    degree-``degree`` monomial chain built from this product."""
    F = Fraction
    T, t = _squaring_teeth(max(2, degree), N, L)
    sq = _square_net(T, t, kind)
    pre = affine_net(
        [[F(1, 2), F(1, 2)], [F(1, 2), F(-1, 2)]], [F(0), F(1, 2)], kind
    )
    trio = parallelize_many(
        compose(sq, _selector(0, 2, kind)),
        compose(sq, _selector(1, 2, kind)),
        compose(identity_net(1, kind), _selector(1, 2, kind)),
    )
    post = affine_net([[F(1), F(-1), F(1)]], [F(-1, 4)], kind)
    return compose_many(post, trio, pre)


def monomial_net(alpha, N: int, L: int, kind: ScalarKind = RATIONAL) -> Network:
    """u -> approximately prod_i u_i^alpha_i on [0,1]^D.

    Degree 0 and 1 are exact affine maps; higher degrees chain the
    approximate product over the list of factors, carrying the remaining
    coordinates alongside the running product."""
    alpha = tuple(int(a) for a in alpha)
    D = len(alpha)
    k = sum(alpha)
    if D < 1 or any(a < 0 for a in alpha):
        raise ValueError("alpha must be a multi-index")
    F = Fraction
    if k == 0:
        return affine_net([[F(0)] * D], [F(1)], kind)
    factors = [i for i, a in enumerate(alpha) for _ in range(a)]
    if k == 1:
        row = [F(int(j == factors[0])) for j in range(D)]
        return affine_net([row], [F(0)], kind)
    prod = product_net(N, L, kind, degree=k)
    # state (p, u_1 .. u_D), p = running product
    init = affine_net(
        [[F(int(j == factors[0])) for j in range(D)]]
        + [[F(int(j == i)) for j in range(D)] for i in range(D)],
        [F(0)] * (D + 1),
        kind,
    )
    net = init
    for fi in factors[1:]:
        pair = affine_net(
            [[F(1)] + [F(0)] * D,
             [F(0)] + [F(int(j == fi)) for j in range(D)]],
            [F(0), F(0)],
            kind,
        )
        branches = [compose(prod, pair)] + [
            compose(_carrier(kind), _selector(1 + j, D + 1, kind)) for j in range(D)
        ]
        net = compose(parallelize_many(*branches), net)
    pick = affine_net([[F(1)] + [F(0)] * D], [F(0)], kind)
    return compose(pick, net)


def monomial_error_bound(k: int, N: int, L: int) -> float:
    """Claimed sup bound 9 k (N+1)^(-7 k L) for degree-k monomials."""
    return 9.0 * k * (N + 1) ** (-7.0 * k * L)


def taylor_coeffs(target: HolderTarget, grid: GridPartition,
                  r_tilde: int | None = None) -> dict:
    """Per-cell Taylor coefficients d^alpha f(beta/K) / alpha!.

    With ``r_tilde`` the values are floored to the 2^-r_tilde lattice
    (returned as Fractions); otherwise raw floats are returned."""
    out = {}
    order = target.taylor_order()
    for beta in sorted(grid.occupied):
        corner = [b / grid.K for b in beta]
        row = {}
        for alpha in multi_indices(target.D, order):
            fact = 1
            for a in alpha:
                fact *= math.factorial(a)
            xi = float(target.partials[alpha](corner)) / fact
            if r_tilde is None:
                row[alpha] = xi
            else:
                row[alpha] = Fraction(math.floor(xi * 2**r_tilde), 2**r_tilde)
        out[beta] = row
    return out


@dataclass(frozen=True)
class ApproxReport:
    """Build and measurement record for one approximator."""

    name: str
    D: int
    s: float
    d: int
    N: int
    L: int
    K: int
    J: int
    eps_target: float
    r_tilde: int
    coeff_scale: float
    delta: str
    n_measured: int
    n_skipped_band: int
    n_skipped_undiscovered: int
    sup_error: float
    rate_constant: float
    sizes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        doc["sizes"] = {k: list(v) for k, v in self.sizes.items()}
        return doc

    CSV_HEADER = ("name", "d", "s", "N", "L", "K", "J", "eps_target",
                  "sup_error", "rate_constant", "n_measured")

    def csv_row(self) -> list:
        return [getattr(self, k) for k in self.CSV_HEADER]


class HolderApprox:
    """Structured approximator: snap + coefficient recall + monomials.

    ``labels[alpha][beta]`` is the quantized coefficient the point-fitting
    network for alpha returns at corner beta/K; :meth:`spot_check` verifies
    the table against rational network evaluation at sampled corners."""

    def __init__(self, target, N, L, d, K, grid, delta, r_tilde, coeff_scale,
                 labels, memorizers, monomials, prod, budget_slack):
        self.target = target
        self.N = N
        self.L = L
        self.d = d
        self.K = K
        self.grid = grid
        self.delta = delta
        self.r_tilde = r_tilde
        self.coeff_scale = coeff_scale  # C1, a power of two
        self.labels = labels
        self.memorizers = memorizers
        self.monomials = monomials
        self.prod = prod
        self.budget_slack = budget_slack
        self._prod_f64 = convert_network(prod, F64)
        self._mono_f64 = {a: convert_network(m, F64) for a, m in monomials.items()}

    @property
    def alphas(self):
        return sorted(self.labels)

    @property
    def eps_target(self) -> float:
        return self.K ** (-float(self.target.s))

    def evaluate(self, x, extrapolate: bool = False):
        """Structured forward pass; None outside the discovered cells.

        With ``extrapolate`` a point in an undiscovered cell is evaluated
        from the Taylor data of an adjacent discovered cell (best effort,
        no error guarantee; used for band repair in compositions)."""
        beta = GridPartition.cell_of(x, self.K)
        if beta not in self.grid.occupied:
            if not extrapolate:
                return None
            beta = self._nearest_neighbor_cell(beta)
            if beta is None:
                return None
        u = [float(t) - b / self.K for t, b in zip(x, beta)]
        C1 = float(self.coeff_scale)
        acc = 0.0
        for alpha in self.alphas:
            xi_n = self.labels[alpha][beta] / 2.0**self.r_tilde
            m = float(evaluate(self._mono_f64[alpha], u)[0])
            p = float(evaluate(self._prod_f64, [xi_n, m])[0])
            acc += 2.0 * C1 * p - C1 * m
        return acc

    def _nearest_neighbor_cell(self, beta):
        import itertools as _it

        best = None
        for off in _it.product((-1, 0, 1), repeat=len(beta)):
            cand = tuple(b + o for b, o in zip(beta, off))
            if cand in self.grid.occupied:
                dist = sum(abs(o) for o in off)
                if best is None or dist < best[0]:
                    best = (dist, cand)
        return best[1] if best else None

    def spot_check(self, per_alpha: int = 3, seed: int = 0) -> dict:
        """Rational evaluation of each point-fitting network at sampled
        corners must reproduce the label table exactly."""
        rng = random.Random(seed)
        cells = sorted(self.grid.occupied)
        checked = 0
        for alpha in self.alphas:
            picks = rng.sample(cells, min(per_alpha, len(cells)))
            for beta in picks:
                corner = list(self.grid.corner(beta))
                (got,) = evaluate(self.memorizers[alpha], corner)
                want = self.labels[alpha][beta]
                if got != want:
                    return {"ok": False, "alpha": alpha, "beta": beta,
                            "got": str(got), "want": want, "checked": checked}
                checked += 1
        return {"ok": True, "checked": checked}

    def _snap_net(self, kind: ScalarKind = RATIONAL) -> Network:
        return grid_snap_net(self.K, self.target.D, self.N, self.L,
                             self.delta, kind)

    def monolith_width_estimate(self) -> int:
        width = sum(size_report(n).width for n in self.memorizers.values())
        width += 2 * sum(size_report(n).width for n in self.monomials.values())
        width += len(self.alphas) * size_report(self.prod).width
        width += 2 * self.target.D * size_report(self._snap_net()).width
        return width

    def network(self, smooth: bool = False,
                kind: ScalarKind = RATIONAL) -> Network:
        """Single assembled network (small budgets only).

        Dense weight storage makes the assembly quadratic in total width,
        so the build refuses above MONOLITH_WIDTH_LIMIT; smoothing
        multiplies the width by 3^D and tightens the refusal accordingly."""
        est = self.monolith_width_estimate()
        if smooth:
            est *= 3**self.target.D
        if est > MONOLITH_WIDTH_LIMIT:
            raise ValueError(
                f"estimated width {est} exceeds the monolithic assembly "
                f"limit {MONOLITH_WIDTH_LIMIT}; use the structured evaluator"
            )
        F = Fraction
        D = self.target.D
        snap = self._snap_net(kind)
        part0 = parallelize(identity_net(D, kind), snap)
        # (x, snap) -> (snap, u = x - snap)
        rows = [[F(int(j == D + i)) for j in range(2 * D)] for i in range(D)]
        rows += [
            [F(int(j == i)) - F(int(j == D + i)) for j in range(2 * D)]
            for i in range(D)
        ]
        mid = affine_net(rows, [F(0)] * (2 * D), kind)
        sel_snap = affine_net(
            [[F(int(j == i)) for j in range(2 * D)] for i in range(D)],
            [F(0)] * D, kind,
        )
        sel_u = affine_net(
            [[F(int(j == D + i)) for j in range(2 * D)] for i in range(D)],
            [F(0)] * D, kind,
        )
        scale = affine_net([[F(1, 2**self.r_tilde)]], [F(0)], kind)
        prod = convert_network(self.prod, kind)
        C1 = Fraction(self.coeff_scale)
        terms = []
        for alpha in self.alphas:
            mem = convert_network(self.memorizers[alpha], kind)
            mono = convert_network(self.monomials[alpha], kind)
            xi_branch = compose_many(scale, mem, sel_snap)
            m_branch = compose(mono, sel_u)
            pair = parallelize(xi_branch, m_branch)
            trio = parallelize(compose(prod, pair), compose(mono, sel_u))
            terms.append(
                compose(affine_net([[2 * C1, -C1]], [F(0)], kind), trio)
            )
        total = affine_net([[F(1)] * len(terms)], [F(0)], kind)
        net = compose_many(
            total, parallelize_many(*terms), mid, part0
        )
        if smooth:
            cfg = SmoothingConfig(self.K, self.delta, D)
            net = median_smooth(net, cfg, allow_wide=D > 8)
        return net

    def report(self, n_measure: int = 300, seed: int = 1) -> ApproxReport:
        rng = random.Random(seed)
        points = self.target.sample(rng, n_measure)
        sup = 0.0
        measured = banded = undiscovered = 0
        for x in points:
            if in_band(x, self.K, self.delta):
                banded += 1
                continue
            got = self.evaluate(x)
            if got is None:
                undiscovered += 1
                continue
            sup = max(sup, abs(float(self.target.f(x)) - got))
            measured += 1
        eps = self.eps_target
        sizes = {
            "memorizer": _size_tuple(max(self.memorizers.values(),
                                         key=lambda n: size_report(n).width)),
            "monomial": _size_tuple(max(self.monomials.values(),
                                        key=lambda n: size_report(n).width)),
            "product": _size_tuple(self.prod),
        }
        return ApproxReport(
            name=self.target.name,
            D=self.target.D,
            s=float(self.target.s),
            d=self.d,
            N=self.N,
            L=self.L,
            K=self.K,
            J=len(self.grid.occupied),
            eps_target=eps,
            r_tilde=self.r_tilde,
            coeff_scale=float(self.coeff_scale),
            delta=str(self.delta),
            n_measured=measured,
            n_skipped_band=banded,
            n_skipped_undiscovered=undiscovered,
            sup_error=sup,
            rate_constant=sup / eps,
            sizes=sizes,
        )


def _size_tuple(net: Network) -> tuple:
    rep = size_report(net)
    return (rep.width, rep.depth, float(rep.max_magnitude))


def estimate_dimension(target: HolderTarget, n: int = 4000, seed: int = 0) -> int:
    """Round the covering-slope estimate of the measured subset."""
    rng = random.Random(seed)
    cloud = PointCloud(tuple(target.sample(rng, n)))
    slope, _ = minkowski_slope(cloud, [0.004, 0.01, 0.04, 0.1, 0.4])
    return max(1, round(slope))


def holder_approx(target: HolderTarget, N: int, L: int, d: int | None = None,
                  n_discover: int = 200_000, seed: int = 0, delta=None,
                  r_tilde: int | None = None, budget_slack: int = 8,
                  extra_band_exponent: int = 0) -> HolderApprox:
    """Build the structured approximator at width-depth budget (N, L).

    The grid resolution is K ~ (N^2 L^2)^(1/d), rounded to a perfect
    square so the snap can run as two coarse staircases; the achieved
    accuracy scale is eps = K^-s.  ``budget_slack`` is forwarded to the
    point-fitting stage (the occupied-cell count carries a constant over
    N^2 L^2)."""
    if d is None:
        d = estimate_dimension(target, seed=seed)
    if d < 1:
        raise ValueError("intrinsic dimension must be >= 1")
    K_target = max(4, math.ceil((N * N * L * L) ** (1.0 / d)))
    Kp = math.isqrt(K_target)
    if Kp * Kp < K_target:
        Kp += 1
    K = Kp * Kp
    s = float(target.s)
    if delta is None:
        delta = Fraction(1, 4 * K ** (max(1, math.ceil(s)) + extra_band_exponent))
    delta = Fraction(delta)
    grid = GridPartition.discover(target, K, n_discover, seed)
    order = target.taylor_order()
    alphas = multi_indices(target.D, order)
    raw = taylor_coeffs(target, grid)
    max_abs = max(
        (abs(v) for row in raw.values() for v in row.values()), default=0.0
    )
    C1 = Fraction(2 ** max(0, math.ceil(math.log2(max_abs + 1.0))))
    if r_tilde is None:
        r_tilde = max(4, math.ceil(math.log2(2 * float(C1)) + s * math.log2(K)))
    labels = {}
    for alpha in alphas:
        table = {}
        for beta, row in raw.items():
            t = (row[alpha] + float(C1)) / (2.0 * float(C1))
            table[beta] = min(2**r_tilde - 1, max(0, math.floor(t * 2**r_tilde)))
        labels[alpha] = table
    cells = sorted(grid.occupied)
    corners = [tuple(Fraction(b, K) for b in beta) for beta in cells]
    sep = Fraction(1, K)  # distinct cells differ by >= 1/K in some axis
    memorizers = {}
    for i, alpha in enumerate(alphas):
        inst = MemorizationInstance(
            tuple((c, labels[alpha][beta]) for c, beta in zip(corners, cells)),
            r=r_tilde,
            delta=sep if len(cells) > 1 else None,
        )
        memorizers[alpha] = memorize_nd(
            inst, N, L, rng_seed=seed, kind=RATIONAL, budget_slack=budget_slack
        )
    monomials = {a: monomial_net(a, N, L, RATIONAL) for a in alphas}
    prod = product_net(N, L, RATIONAL)
    return HolderApprox(target, N, L, d, K, grid, delta, r_tilde, C1,
                        labels, memorizers, monomials, prod, budget_slack)


def holder_approx_net(target: HolderTarget, N: int, L: int,
                      d: int | None = None, smooth: bool = False,
                      seed: int = 0, **kwargs) -> tuple:
    """Monolithic network plus its report (feasible budgets only)."""
    approx = holder_approx(target, N, L, d=d, seed=seed, **kwargs)
    return approx.network(smooth=smooth), approx.report(seed=seed + 1)


def load_target(doc: dict) -> HolderTarget:
    """Build a named target from a JSON document."""
    from .targets import bump_target, constant_target, poly_target_1d, sine_curve_target

    try:
        name = doc["name"]
        if name == "sine-curve":
            return sine_curve_target(s=doc.get("s", 1.0), freq=doc.get("freq", 1))
        if name == "poly-1d":
            return poly_target_1d(doc["coeffs"], s=doc.get("s", 2.0))
        if name == "constant":
            return constant_target(doc["value"], D=doc.get("D", 1),
                                   s=doc.get("s", 1.0))
        if name == "bump":
            sigma = {tuple(entry): 1 for entry in doc["support"]}
            return bump_target(sigma, K=doc["K"], s=doc.get("s", 2.0),
                               a=doc.get("a", 1.0), D=doc.get("D", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed target document: {exc}") from exc
    raise ValueError(f"unknown target {doc.get('name')!r}")
