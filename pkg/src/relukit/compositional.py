"""Layered sparse models: validation, error propagation, and assembly.

A model of level ell composes vector maps G_0, ..., G_ell where each
component g_ij reads only a small set S_ij of its level's coordinates,
is Hölder-s_ij smooth, and sees inputs of low Minkowski dimension d_ij.
Each component is approximated on an enlarged copy of its input set and
the per-level accuracy schedule eps_i = eps_0 (C+1)^i keeps the
accumulated error delta_i below eps_{i+1}.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .geometry import PointCloud, minkowski_slope
from .holder import HolderApprox, holder_approx
from .pwl import median_smooth_fn
from .targets import HolderTarget, _fd_partial, multi_indices

__all__ = [
    "Component",
    "CompositionalSpec",
    "ErrorSchedule",
    "validate_model",
    "propagate_errors",
    "simulate_propagation",
    "enlargement_cover_bound",
    "CompositionalApprox",
    "compositional_net",
    "xy_model_spec",
    "load_comp_spec",
]

OFF_SPARSITY_TOL = 1e-9
HOLDER_QUOTIENT_TOL = 0.25
DIMENSION_TOL = 0.6


@dataclass(frozen=True)
class Component:
    """One map g_ij: full level input -> scalar, claimed to read only S.

    ``partials`` holds derivative oracles in the S coordinates (length
    |S| multi-indices); missing oracles fall back to central finite
    differences with step 1e-5 (accuracy caveat: order <= 2 only)."""

    fn: object
    S: tuple
    s: float
    d: int
    partials: dict | None = None
    name: str = "component"

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(int(i) for i in self.S))
        if self.s < 1:
            raise ValueError("component smoothness must be >= 1")
        if self.d < 1 or not self.S:
            raise ValueError("need d >= 1 and nonempty S")

    def restricted(self, fill):
        """Oracle on the S coordinates only; off-S inputs pinned to fill."""
        def f(u):
            x = list(fill)
            for idx, t in zip(self.S, u):
                x[idx] = float(t)
            return float(self.fn(x))

        return f

    def restricted_partials(self, fill):
        m = len(self.S)
        f = self.restricted(fill)
        out = {}
        for alpha in multi_indices(m, int(self.s)):
            if self.partials is not None and alpha in self.partials:
                oracle = self.partials[alpha]

                def g(u, oracle=oracle):
                    x = list(fill)
                    for idx, t in zip(self.S, u):
                        x[idx] = float(t)
                    return float(oracle(x))

                out[alpha] = g
            else:
                out[alpha] = (lambda u, alpha=alpha: _fd_partial(f, list(u), alpha))
        return out


@dataclass(frozen=True)
class CompositionalSpec:
    """Level-ell model: dims (D_0, ..., D_{ell+1}) with D_{ell+1} = 1.

    ``components[(i, j)]`` computes output j of level i; a missing level 0
    means the identity (then D_1 = D_0).  Intermediate values live in
    [-C, C] and are carried normalized to [0,1] between levels."""

    ell: int
    dims: tuple
    components: dict
    C: float
    sampler: object
    name: str = "model"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if self.ell < 0 or len(dims) != self.ell + 2 or dims[-1] != 1:
            raise ValueError("dims must be (D_0, ..., D_ell, 1)")
        if self.C <= 0:
            raise ValueError("range bound C must be positive")
        levels = {i for i, _ in self.components}
        if 0 not in levels and dims[1] != dims[0]:
            raise ValueError("implicit identity level 0 needs D_1 = D_0")
        for i in range(self.ell + 1):
            if i == 0 and 0 not in levels:
                continue
            for j in range(dims[i + 1]):
                if (i, j) not in self.components:
                    raise ValueError(f"missing component ({i}, {j})")
        for (i, j), comp in self.components.items():
            if not 0 <= i <= self.ell or not 0 <= j < dims[i + 1]:
                raise ValueError(f"component key ({i}, {j}) out of range")
            if len(comp.S) > dims[i] or any(not 0 <= t < dims[i] for t in comp.S):
                raise ValueError(f"sparsity set of ({i}, {j}) out of range")

    def has_level0(self) -> bool:
        return any(i == 0 for i, _ in self.components)

    def normalize(self, z: float) -> float:
        return (float(z) + self.C) / (2.0 * self.C)

    def denormalize(self, u: float) -> float:
        return 2.0 * self.C * float(u) - self.C

    def level_fn(self, i: int):
        """Exact level map on normalized inputs (raw inputs at level 0)."""
        if i == 0 and not self.has_level0():
            return lambda u: list(u)

        def fn(u):
            if i == 0:
                raw_in = list(u)
            else:
                raw_in = [self.denormalize(t) for t in u]
            out = []
            for j in range(self.dims[i + 1]):
                out.append(self.normalize(self.components[(i, j)].fn(raw_in)))
            return out

        return fn

    def level_inputs(self, xs, upto: int):
        """Normalized level-``upto`` inputs for raw sample points xs."""
        pts = [list(x) for x in xs]
        for i in range(upto):
            fn = self.level_fn(i)
            pts = [fn(p) for p in pts]
        return pts

    def true_value(self, x) -> float:
        u = list(x)
        for i in range(self.ell + 1):
            u = self.level_fn(i)(u)
        return self.denormalize(u[0])

    def hardness(self, include_level0: bool = False) -> tuple:
        """arg max d/s over components (level 0 excluded by default);
        ties broken toward the smallest s."""
        best = None
        for (i, _), comp in sorted(self.components.items()):
            if i == 0 and not include_level0:
                continue
            key = (comp.d / comp.s, -comp.s)
            if best is None or key > best[0]:
                best = (key, (comp.d, comp.s))
        if best is None:  # only level-0 components present
            return self.hardness(include_level0=True)
        return best[1]


def validate_model(spec: CompositionalSpec, probes: int = 40,
                   seed: int = 0) -> dict:
    """Check sparsity (C), smoothness quotients (S), and input dimension
    (M) for every component; raises with the offending (i, j)."""
    rng = random.Random(seed)
    base = spec.sampler(rng, max(1000, probes * 25))
    diagnostics = {}
    violations = []
    for (i, j), comp in sorted(spec.components.items()):
        inputs = spec.level_inputs(base, i)
        entry = {}
        # (C) off-sparsity perturbations must not move the output
        worst_c = 0.0
        for _ in range(probes):
            x = list(rng.choice(inputs))
            raw = x if i == 0 and spec.has_level0() else (
                x if i == 0 else [spec.denormalize(t) for t in x]
            )
            before = float(comp.fn(list(raw)))
            bumped = list(raw)
            for idx in range(len(bumped)):
                if idx not in comp.S:
                    bumped[idx] = rng.uniform(-spec.C, spec.C)
            worst_c = max(worst_c, abs(float(comp.fn(bumped)) - before))
            if abs(before) > spec.C * (1 + HOLDER_QUOTIENT_TOL):
                violations.append(((i, j), "range", before))
        entry["off_sparsity_shift"] = worst_c
        if worst_c > OFF_SPARSITY_TOL:
            violations.append(((i, j), "sparsity", worst_c))
        # (S) Hölder quotient of order min(s,1) on close restricted pairs
        fill = [0.0] * spec.dims[i]
        f = comp.restricted(fill)
        order = min(comp.s, 1.0)
        worst_q = 0.0
        lo, hi = (0.0, 1.0) if i == 0 and spec.has_level0() else (-spec.C, spec.C)
        for _ in range(probes):
            u = [rng.uniform(lo, hi) for _ in comp.S]
            v = [t + rng.uniform(-0.1, 0.1) for t in u]
            dist = max(abs(a - b) for a, b in zip(u, v))
            if dist == 0:
                continue
            worst_q = max(worst_q, abs(f(u) - f(v)) / dist**order)
        entry["holder_quotient"] = worst_q
        if worst_q > spec.C * (1 + HOLDER_QUOTIENT_TOL):
            violations.append(((i, j), "smoothness", worst_q))
        # (M) covering slope of the restricted input set
        dense = spec.level_inputs(spec.sampler(rng, 8000), i)
        cloud = PointCloud(tuple(tuple(p[t] for t in comp.S) for p in dense))
        try:
            slope, _ = minkowski_slope(cloud, [0.02, 0.04, 0.1, 0.25, 0.7])
        except ValueError:
            slope = 0.0  # degenerate cloud: fits in one ball at every scale
        entry["dimension_slope"] = slope
        if slope > comp.d + DIMENSION_TOL:
            violations.append(((i, j), "dimension", slope))
        diagnostics[(i, j)] = entry
    if violations:
        raise ValueError(f"model conditions violated: {violations}")
    return diagnostics


@dataclass
class ErrorSchedule:
    """Per-level accuracies eps_i = eps_0 (C+1)^i with eps_ell <= 1."""

    ell: int
    C: float
    eps0: float
    measured_deltas: list = field(default_factory=list)

    def __post_init__(self):
        if self.ell < 0 or self.C <= 0 or self.eps0 <= 0:
            raise ValueError("need ell >= 0, C > 0, eps0 > 0")
        if self.eps(self.ell) > 1:
            raise ValueError(f"schedule violation: eps_ell = {self.eps(self.ell)} > 1")

    @classmethod
    def for_target(cls, eps: float, ell: int, C: float) -> "ErrorSchedule":
        denom = max(1, ell) * (C + 1) ** ell
        return cls(ell, C, eps / denom)

    def eps(self, i: int) -> float:
        return self.eps0 * (self.C + 1) ** i

    def all_eps(self):
        return [self.eps(i) for i in range(self.ell + 1)]

    def holds(self) -> bool:
        """delta_i <= eps_{i+1} for every measured accumulated error."""
        return all(
            d <= self.eps(i + 1) for i, d in enumerate(self.measured_deltas)
        )


def propagate_errors(ell: int, C: float, eps) -> dict:
    """Telescoped bound sum_i C^(ell-i) max_j eps_ij and the coarse bound
    ell * max(C^(ell-1), 1) * max eps; eps is one row per level 1..ell."""
    eps = [[float(e) for e in row] for row in eps]
    if len(eps) != ell:
        raise ValueError(f"need {ell} rows of per-level errors")
    if any(e < 0 for row in eps for e in row):
        raise ValueError("errors must be nonnegative")
    telescoped = sum(C ** (ell - i) * max(eps[i - 1]) for i in range(1, ell + 1))
    overall = max((e for row in eps for e in row), default=0.0)
    coarse = ell * max(C ** (ell - 1), 1.0) * overall
    return {"telescoped": telescoped, "coarse": coarse}


def simulate_propagation(ell: int, C: float, eps, rng,
                         width: int = 3) -> dict:
    """Random C-Lipschitz level maps with per-level perturbations bounded
    by eps_ij; returns the measured final deviation and the telescoped
    bound it may not exceed."""
    eps = [[float(e) for e in row] for row in eps]
    layers = []
    for i in range(ell):
        m_out = len(eps[i])
        rows = []
        for _ in range(m_out):
            w = [rng.uniform(-1, 1) for _ in range(width)]
            total = sum(abs(t) for t in w) or 1.0
            w = [t / total for t in w]
            phase = rng.uniform(0, 2 * math.pi)
            rows.append((w, phase))
        layers.append(rows)

    def apply(level, z, perturb):
        out = []
        for j, (w, phase) in enumerate(layers[level]):
            acc = sum(a * b for a, b in zip(w, (z * width)[: width]))
            val = C * math.sin(acc + phase)
            if perturb:
                val += rng.uniform(-eps[level][j], eps[level][j])
            out.append(val)
        return out

    x = [rng.uniform(-1, 1) for _ in range(width)]
    clean = list(x)
    dirty = list(x)
    for i in range(ell):
        state = rng.getstate()
        clean = apply(i, clean, perturb=False)
        rng.setstate(state)
        dirty = apply(i, dirty, perturb=True)
    measured = abs(clean[0] - dirty[0]) if clean else 0.0
    bound = propagate_errors(ell, C, eps)["telescoped"]
    return {"measured": measured, "bound": bound}


def enlargement_cover_bound(n_cover: int, eps: float, eta: float, m: int,
                            constant: float = 1.0) -> float:
    """Covering bound for the sup-norm eps-enlargement:
    constant * N_A * ceil(1 + eps/eta)^m."""
    if n_cover < 1 or eps < 0 or eta <= 0 or m < 1:
        raise ValueError("bad covering-bound arguments")
    return constant * n_cover * math.ceil(1.0 + eps / eta) ** m


class CompositionalApprox:
    """Per-component structured approximators composed level by level.

    Each component evaluator is median-smoothed at its own band width so
    composed inputs that drift into a snapping band are repaired."""

    def __init__(self, spec, schedule, approximators, budgets):
        self.spec = spec
        self.schedule = schedule
        self.approximators = approximators  # (i, j) -> HolderApprox
        self.budgets = budgets
        self._evals = {
            key: self._smoothed(ap) for key, ap in approximators.items()
        }

    @staticmethod
    def _smoothed(ap: HolderApprox):
        def total(u):
            clipped = [min(1.0, max(0.0, float(t))) for t in u]
            got = ap.evaluate(clipped, extrapolate=True)
            return 0.0 if got is None else got

        return median_smooth_fn(total, ap.delta, ap.target.D)

    def level_outputs(self, x, upto: int):
        """Approximate normalized outputs after levels 0..upto-1."""
        u = list(x)
        for i in range(upto):
            if i == 0 and not self.spec.has_level0():
                continue
            nxt = []
            for j in range(self.spec.dims[i + 1]):
                comp = self.spec.components[(i, j)]
                restricted = [u[t] for t in comp.S]
                nxt.append(self._evals[(i, j)](restricted))
            u = nxt
        return u

    def evaluate(self, x) -> float:
        u = self.level_outputs(x, self.spec.ell + 1)
        return self.spec.denormalize(u[0])

    def network(self, smooth: bool = True):
        """Single composed network from the per-component assemblies.

        Feasible at small component budgets only (see
        HolderApprox.network); smoothing repairs snapping bands so the
        result is usable on arbitrary inputs."""
        from fractions import Fraction as F

        from .nets import affine_net, compose, parallelize_many
        from .scalars import RATIONAL

        net = None
        for i in range(self.spec.ell + 1):
            if i == 0 and not self.spec.has_level0():
                continue
            D_i = self.spec.dims[i]
            branches = []
            for j in range(self.spec.dims[i + 1]):
                comp = self.spec.components[(i, j)]
                rows = [
                    [F(int(t == idx)) for t in range(D_i)] for idx in comp.S
                ]
                sel = affine_net(rows, [F(0)] * len(comp.S), RATIONAL)
                mono = self.approximators[(i, j)].network(smooth=smooth)
                branches.append(compose(mono, sel))
            level = parallelize_many(*branches)
            net = level if net is None else compose(level, net)
        C = F(self.spec.C)
        denorm = affine_net([[2 * C]], [-C], RATIONAL)
        return compose(denorm, net)

    def measure(self, n: int = 200, seed: int = 11) -> dict:
        """Monte Carlo per-level accumulated errors and the final sup.

        delta_i compares approximate and exact level-(i) outputs in raw
        units over sampled M points."""
        rng = random.Random(seed)
        xs = self.spec.sampler(rng, n)
        deltas = [0.0] * (self.spec.ell + 1)
        final = 0.0
        for x in xs:
            for i in range(self.spec.ell + 1):
                got = self.level_outputs(x, i + 1)
                want = self.spec.level_inputs([x], i + 1)[0]
                dev = max(abs(a - b) for a, b in zip(got, want))
                deltas[i] = max(deltas[i], 2.0 * self.spec.C * dev)
            final = max(final, abs(self.evaluate(x) - self.spec.true_value(x)))
        self.schedule.measured_deltas = deltas
        return {
            "deltas": deltas,
            "final_sup": final,
            "eps": self.schedule.all_eps(),
            "schedule_holds": self.schedule.holds(),
        }

    def report(self, n: int = 200, seed: int = 11) -> dict:
        measured = self.measure(n, seed)
        d_star, s_star = self.spec.hardness()
        return {
            "name": self.spec.name,
            "ell": self.spec.ell,
            "C": self.spec.C,
            "d_star": d_star,
            "s_star": s_star,
            "budgets": {f"{i},{j}": list(b) for (i, j), b in self.budgets.items()},
            "components": {
                f"{i},{j}": ap.report(n_measure=50, seed=seed).to_json()
                for (i, j), ap in self.approximators.items()
            },
            **measured,
        }


def _component_budget(eps_norm: float, s: float, d: int) -> tuple:
    """Smallest (N, L=1) with grid K ~ (N L)^(2/d) fine enough for
    K^-s <= eps_norm, capped at N=16 (empirical checks take over)."""
    K_req = eps_norm ** (-1.0 / s)
    N = max(2, math.ceil(K_req ** (d / 2.0)))
    return min(N, 16), 1


def compositional_net(spec: CompositionalSpec, eps: float,
                      budgets: dict | None = None, seed: int = 0,
                      n_discover: int = 30000,
                      r_tilde: int | None = None) -> CompositionalApprox:
    """Approximate every component on its enlarged input set and compose.

    Components at level i are built to the scheduled accuracy eps_i; their
    input samplers add uniform sup-norm jitter of the upstream error
    radius so discovery covers everything the approximate chain can emit."""
    schedule = ErrorSchedule.for_target(eps, spec.ell, spec.C)
    rng = random.Random(seed)
    base = spec.sampler(rng, 4000)
    approximators = {}
    chosen = {}
    for (i, j), comp in sorted(spec.components.items()):
        inputs = spec.level_inputs(base, i)
        eps_i = schedule.eps(i)
        jitter = 0.0 if i == 0 else eps_i / (2.0 * spec.C)
        restricted = [tuple(p[t] for t in comp.S) for p in inputs]

        def sampler(rg, n, restricted=restricted, jitter=jitter):
            out = []
            for _ in range(n):
                p = rg.choice(restricted)
                out.append(tuple(
                    min(1.0, max(0.0, t + rg.uniform(-jitter, jitter)))
                    for t in p
                ))
            return out

        fill = [0.5] * spec.dims[i]
        if i > 0 or not spec.has_level0():
            fill_raw = [spec.denormalize(0.5)] * spec.dims[i]
        else:
            fill_raw = [0.5] * spec.dims[i]

        raw_f = comp.restricted(fill_raw)
        raw_partials = comp.restricted_partials(fill_raw)
        if i == 0:
            def f(u, raw_f=raw_f):
                return spec.normalize(raw_f(u))

            partials = {
                a: (lambda u, g=g, a=a: spec.normalize(g(u)) if sum(a) == 0
                    else g(u) / (2.0 * spec.C))
                for a, g in raw_partials.items()
            }
        else:
            scale = 2.0 * spec.C

            def f(u, raw_f=raw_f, scale=scale):
                return spec.normalize(raw_f([scale * t - spec.C for t in u]))

            # f(u) = (g(2Cu - C) + C) / 2C, so d^a f = g^(a) (2C)^(|a|-1)
            partials = {
                a: (lambda u, g=g, a=a, scale=scale:
                    spec.normalize(g([scale * t - spec.C for t in u]))
                    if sum(a) == 0
                    else g([scale * t - spec.C for t in u])
                    * scale ** (sum(a) - 1))
                for a, g in raw_partials.items()
            }
        target = HolderTarget(
            len(comp.S), comp.s, max(1.0, spec.C), partials[(0,) * len(comp.S)],
            partials, sampler, name=f"{spec.name}-{i}-{j}", validate=False,
        )
        N, L = (budgets or {}).get((i, j)) or _component_budget(
            eps_i / (2.0 * spec.C), comp.s, comp.d
        )
        chosen[(i, j)] = (N, L)
        rt = r_tilde
        if rt is None:
            rt = max(8, math.ceil(-math.log2(eps_i / (2.0 * spec.C))) + 4)
        # narrow bands keep the median-smoothing penalty below schedule
        approximators[(i, j)] = holder_approx(
            target, N, L, d=comp.d, n_discover=n_discover, seed=seed,
            r_tilde=rt, extra_band_exponent=2,
        )
    return CompositionalApprox(spec, schedule, approximators, chosen)


def xy_model_spec() -> CompositionalSpec:
    """g(x, y) = x y written as ((x+y)^2 - (x-y)^2) / 4: level 0 computes
    the two squares, level 1 the scaled difference."""

    def g01(x):
        return (x[0] + x[1]) ** 2

    def g02(x):
        return (x[0] - x[1]) ** 2

    def g1(z):
        return (z[0] - z[1]) / 4.0

    c01 = Component(
        g01, S=(0, 1), s=2.0, d=2, name="sum-square",
        partials={
            (0, 0): g01,
            (1, 0): lambda x: 2 * (x[0] + x[1]),
            (0, 1): lambda x: 2 * (x[0] + x[1]),
            (2, 0): lambda x: 2.0,
            (1, 1): lambda x: 2.0,
            (0, 2): lambda x: 2.0,
        },
    )
    c02 = Component(
        g02, S=(0, 1), s=2.0, d=2, name="diff-square",
        partials={
            (0, 0): g02,
            (1, 0): lambda x: 2 * (x[0] - x[1]),
            (0, 1): lambda x: -2 * (x[0] - x[1]),
            (2, 0): lambda x: 2.0,
            (1, 1): lambda x: -2.0,
            (0, 2): lambda x: 2.0,
        },
    )
    c1 = Component(
        g1, S=(0, 1), s=2.0, d=2, name="scaled-diff",
        partials={
            (0, 0): g1,
            (1, 0): lambda z: 0.25,
            (0, 1): lambda z: -0.25,
            (2, 0): lambda z: 0.0,
            (1, 1): lambda z: 0.0,
            (0, 2): lambda z: 0.0,
        },
    )

    def sampler(rng, n):
        return [(rng.random(), rng.random()) for _ in range(n)]

    # C bounds both the ranges ([0,4] and [-1,1]) and the sup-norm
    # Lipschitz constants (up to 8 for the squares on [0,1]^2)
    return CompositionalSpec(
        ell=1, dims=(2, 2, 1),
        components={(0, 0): c01, (0, 1): c02, (1, 0): c1},
        C=8.0, sampler=sampler, name="xy",
    )


def load_comp_spec(doc: dict) -> CompositionalSpec:
    """Model spec from JSON; currently the named builtins only."""
    try:
        name = doc["model"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc
    if name == "xy":
        return xy_model_spec()
    raise ValueError(f"unknown model {name!r}")
