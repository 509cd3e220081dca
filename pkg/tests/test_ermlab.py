import csv
import math
import random

import numpy as np
import pytest
import torch

from relukit.ermlab import (
    CSV_COLUMNS,
    RegressionConfig,
    gen_regression_data,
    rate_experiment,
    risk_eval,
    torch_to_network,
    train_erm,
)
from relukit.ermlab import _Mlp
from relukit.nets import evaluate
from relukit.targets import constant_target, poly_target_1d, sine_curve_target


def small_cfg(**kw):
    base = dict(
        target=sine_curve_target(s=1.0),
        d=1,
        sigma=0.1,
        n_grid=(64, 256),
        trials=3,
        iterations=1200,
        restarts=4,
        mc_samples=1000,
        seed=0,
    )
    base.update(kw)
    return RegressionConfig(**base)


class TestConfig:
    def test_rejects_descending_grid(self):
        with pytest.raises(ValueError):
            small_cfg(n_grid=(256, 64))

    def test_rejects_few_trials(self):
        with pytest.raises(ValueError):
            small_cfg(trials=2)

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError):
            small_cfg(sigma=-0.1)

    def test_rate_exponent(self):
        assert small_cfg().rate_exponent() == pytest.approx(-2.0 / 3.0)

    def test_architecture_grows(self):
        cfg = small_cfg()
        sizes = [cfg.architecture(n)[0] for n in (128, 4096, 10**6)]
        assert sizes == sorted(sizes)
        assert sizes[0] < sizes[-1]


class TestData:
    def test_noiseless_labels_exact(self):
        cfg = small_cfg(sigma=0.0)
        data = gen_regression_data(cfg, 50, seed=7)
        for x, y in zip(data.xs, data.ys):
            assert y == float(cfg.target.f(x))

    def test_deterministic(self):
        cfg = small_cfg()
        a = gen_regression_data(cfg, 40, seed=3)
        b = gen_regression_data(cfg, 40, seed=3)
        c = gen_regression_data(cfg, 40, seed=4)
        assert a == b
        assert a.ys != c.ys

    def test_noise_variance(self):
        # sample variance of Y - f(X) within 3 standard errors at n = 10^4
        cfg = small_cfg()
        n = 10**4
        data = gen_regression_data(cfg, n, seed=11)
        resid = np.array(data.ys) - np.array(
            [float(cfg.target.f(x)) for x in data.xs]
        )
        var = float(np.var(resid))
        se = cfg.sigma**2 * math.sqrt(2.0 / n)
        assert abs(var - cfg.sigma**2) <= 3 * se

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            gen_regression_data(small_cfg(), 0, seed=0)


class TestTrain:
    def test_zero_target_noiseless(self):
        cfg = small_cfg(target=constant_target(0.0, D=3, s=1.0), sigma=0.0,
                        iterations=400)
        data = gen_regression_data(cfg, 64, seed=1)
        net, info = train_erm(data, (4, 1, 100.0), cfg, benchmark_loss=1e-12,
                              seed=1)
        assert info["empirical_loss"] <= 1e-6

    def test_deterministic_loss(self):
        cfg = small_cfg(iterations=100, restarts=1)
        data = gen_regression_data(cfg, 64, seed=2)
        _, a = train_erm(data, (3, 1, 100.0), cfg, benchmark_loss=0.0, seed=5)
        _, b = train_erm(data, (3, 1, 100.0), cfg, benchmark_loss=0.0, seed=5)
        assert a["empirical_loss"] == b["empirical_loss"]

    def test_weight_clipping(self):
        cfg = small_cfg(iterations=150, restarts=1, lr=0.5)
        data = gen_regression_data(cfg, 64, seed=2)
        B = 0.25
        net, _ = train_erm(data, (3, 1, B), cfg, benchmark_loss=0.0, seed=5)
        for W, v in net.layers:
            assert all(abs(w) <= B for row in W for w in row)
            assert all(abs(t) <= B for t in v)

    def test_suboptimal_flag(self):
        cfg = small_cfg(iterations=5, restarts=1)
        data = gen_regression_data(cfg, 64, seed=2)
        _, info = train_erm(data, (2, 1, 100.0), cfg, benchmark_loss=1e-15,
                            seed=5)
        assert info["suboptimal-ERM"]


class TestExport:
    def test_matches_torch_forward(self, rng):
        torch.manual_seed(9)
        model = _Mlp(3, 5, 2).double()
        net = torch_to_network(model)
        assert net.depth == 2
        for _ in range(25):
            x = [rng.uniform(-1, 1) for _ in range(3)]
            with torch.no_grad():
                want = float(model(torch.tensor([x], dtype=torch.float64))[0, 0])
            got = float(evaluate(net, x)[0])
            assert got == pytest.approx(want, abs=1e-12)


class TestRiskEval:
    def test_constant_vs_constant_closed_form(self):
        target = constant_target(0.7, D=2, s=1.0)
        out = risk_eval(lambda pts: np.full(len(pts), 0.4), target,
                        mc_samples=1000)
        assert out["risk"] == pytest.approx(0.3**2)
        assert out["risk_se"] == pytest.approx(0.0, abs=1e-15)

    def test_rejects_small_mc(self):
        target = constant_target(0.0, D=1, s=1.0)
        with pytest.raises(ValueError):
            risk_eval(lambda pts: np.zeros(len(pts)), target, mc_samples=100)

    def test_self_consistency_10x(self):
        # estimate with m and 10 m samples agree within 3 combined SEs
        target = poly_target_1d([0.1, 0.4, -0.2], s=2.0)
        predict = lambda pts: np.array([p[0] * 0.3 for p in pts])
        a = risk_eval(predict, target, mc_samples=1000, seed=1)
        b = risk_eval(predict, target, mc_samples=10000, seed=2)
        tol = 3 * (a["risk_se"] + b["risk_se"])
        assert abs(a["risk"] - b["risk"]) <= tol


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    path = tmp_path_factory.mktemp("erm") / "rows.csv"
    rep = rate_experiment(small_cfg(), csv_path=str(path))
    return rep, path


class TestRateExperiment:

    def test_row_shape_and_csv(self, report):
        rep, path = report
        assert len(rep.rows) == 2 * 3
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + len(rep.rows)

    def test_risk_positive_and_se_reported(self, report):
        rep, _ = report
        for row in rep.rows:
            rec = dict(zip(CSV_COLUMNS, row))
            assert rec["risk"] > 0
            assert rec["risk_se"] > 0

    def test_benchmark_loss_bounded(self, report):
        # empirical benchmark loss <= sigma^2 + C (N L)^(-4s/d) + sampling slack
        rep, _ = report
        cfg = small_cfg()
        s, d = 1.0, 1
        for row in rep.rows:
            rec = dict(zip(CSV_COLUMNS, row))
            budget = (rec["N"] * rec["L"]) ** (-4.0 * s / d)
            slack = 4 * cfg.sigma**2 / math.sqrt(rec["n"])
            assert rec["benchmark_loss"] <= cfg.sigma**2 + 40.0 * budget + slack

    def test_covering_ratio_bounded(self, report):
        rep, _ = report
        assert all(0 < r < 10.0 for r in rep.covering_ratios)
        # the entropy/n ratio should not blow up along the schedule
        assert rep.covering_ratios[-1] <= 2 * rep.covering_ratios[0] + 1.0

    def test_benchmark_usually_beaten(self, report):
        rep, _ = report
        assert rep.suboptimal_runs <= math.ceil(0.1 * len(rep.rows))

    def test_json_fields(self, report):
        rep, _ = report
        doc = rep.to_json()
        assert doc["exponent"] == pytest.approx(-2.0 / 3.0)
        assert "slope" in doc and "passed" in doc
