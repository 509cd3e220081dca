"""Command-line front end: constructions, evaluation, geometry, experiments.

Exit codes: 0 all requested assertions passed, 1 an assertion failed,
2 bad usage / unknown subcommand, 3 invalid input file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .compositional import compositional_net, load_comp_spec
from .ermlab import RegressionConfig, rate_experiment
from .geometry import greedy_cover, load_cloud, minkowski_slope
from .holder import ApproxReport, holder_approx, load_target
from .memorize import load_instance, memorize_nd
from .nets import deserialize, evaluate, serialize
from .scalars import RATIONAL, ScalarKind, scalar_to_str

__all__ = ["CommandResult", "run", "main"]

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_BAD_INPUT = 3


@dataclass(frozen=True)
class CommandResult:
    """Outcome of one invocation; exit 0 iff every assertion passed."""

    exit_code: int
    artifacts: tuple = ()
    summary: str = ""


class _BadInput(Exception):
    pass




def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _BadInput(f"{path}: {exc}") from exc


def _dump_json(path: str, doc) -> None:
    # sorted keys and fixed separators keep artifacts byte-stable
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _parse_point(text: str, kind: ScalarKind):
    try:
        parts = [t.strip() for t in text.split(",") if t.strip()]
        if kind.variant == "f64":
            return [float(t) for t in parts]
        return [Fraction(t) for t in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise _BadInput(f"bad point {text!r}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="relukit", description=__doc__)
    top.add_argument("--scalar", default="rational",
                     help="f64 | bigfloat:<bits> | rational")
    top.add_argument("--seed", type=int, default=0)
    top.add_argument("--threads", type=int, default=1,
                     help="worker threads for experiment sweeps")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a serialized network")
    p.add_argument("--net", required=True)
    p.add_argument("--input", required=True, help="comma-separated point")
    p.add_argument("--out", default=None)

    p = sub.add_parser("memorize", help="fit a point-memorizing network")
    p.add_argument("--instance", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--slack", type=int, default=1)

    p = sub.add_parser("approx", help="build a smoothness-driven approximator")
    p.add_argument("--target", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--report", default=None, help="CSV output path")
    p.add_argument("--n-discover", type=int, default=50000)
    p.add_argument("--n-measure", type=int, default=300)

    p = sub.add_parser("compose", help="approximate a compositional model")
    p.add_argument("--spec", required=True,
                   help="JSON spec file or builtin name such as 'xy'")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--report", default=None, help="JSON output path")

    p = sub.add_parser("cover", help="greedy sup-norm covering number")
    p.add_argument("--cloud", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("dim", help="covering-dimension slope of a cloud")
    p.add_argument("--cloud", required=True)
    p.add_argument("--eps-grid", default="0.004,0.01,0.04,0.1,0.4")
    p.add_argument("--out", default=None)

    p = sub.add_parser("erm-sweep", help="regression rate experiment")
    p.add_argument("--target", required=True)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-grid", default="128,512,2048,4096")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--report", required=True, help="CSV output path")
    p.add_argument("--summary", default=None, help="JSON summary path")

    p = sub.add_parser("verify", help="replay an instance against a network")
    p.add_argument("--net", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--tol", type=float, default=0.0)
    return top


def _cmd_eval(args, kind) -> CommandResult:
    net = _deserialize_file(args.net)
    x = _parse_point(args.input, net.scalar_kind)
    try:
        out = evaluate(net, x)
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    rendered = [scalar_to_str(t, net.scalar_kind) for t in out]
    artifacts = ()
    if args.out:
        _dump_json(args.out, {"output": rendered})
        artifacts = (args.out,)
    return CommandResult(EXIT_OK, artifacts, " ".join(rendered))


def _deserialize_file(path: str):
    doc = _load_json(path)
    try:
        return deserialize(doc)
    except Exception as exc:
        raise _BadInput(f"{path}: {exc}") from exc


def _cmd_memorize(args, kind) -> CommandResult:
    try:
        instance = load_instance(_load_json(args.instance))
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    try:
        net = memorize_nd(instance, args.N, args.L, rng_seed=args.seed,
                          kind=kind, budget_slack=args.slack)
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    artifacts = ()
    if args.out:
        _dump_json(args.out, serialize(net))
        artifacts = (args.out,)
    summary = f"memorized {instance.count} points, depth {net.depth}"
    if args.verify:
        tol = 0.0 if kind.variant == "rational" else 2.0**-40
        worst = 0.0
        for x, y in instance.samples:
            got = evaluate(net, list(x))[0]
            worst = max(worst, abs(float(got - y)))
        if worst > tol:
            return CommandResult(EXIT_ASSERTION, artifacts,
                                 f"recall error {worst} exceeds {tol}")
        summary += f", recall error {worst} <= {tol}"
    return CommandResult(EXIT_OK, artifacts, summary)


def _cmd_approx(args, kind) -> CommandResult:
    try:
        target = load_target(_load_json(args.target))
        approx = holder_approx(target, args.N, args.L, d=args.d,
                               n_discover=args.n_discover, seed=args.seed)
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    rep = approx.report(n_measure=args.n_measure, seed=args.seed + 1)
    artifacts = ()
    if args.report:
        with open(args.report, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ApproxReport.CSV_HEADER)
            writer.writerow(rep.csv_row())
        artifacts = (args.report,)
    return CommandResult(
        EXIT_OK, artifacts,
        f"sup error {rep.sup_error:.3e} at eps target {rep.eps_target:.3e}",
    )


def _cmd_compose(args, kind) -> CommandResult:
    if args.spec.endswith(".json"):
        doc = _load_json(args.spec)
    else:
        doc = {"model": args.spec}
    try:
        spec = load_comp_spec(doc)
        approx = compositional_net(spec, eps=args.eps, seed=args.seed)
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    rep = approx.report()
    artifacts = ()
    if args.report:
        _dump_json(args.report, rep)
        artifacts = (args.report,)
    ok = rep["final_sup"] <= args.eps and rep["schedule_holds"]
    code = EXIT_OK if ok else EXIT_ASSERTION
    return CommandResult(
        code, artifacts,
        f"final sup {rep['final_sup']:.3e} vs target {args.eps:.3e}, "
        f"schedule {'holds' if rep['schedule_holds'] else 'violated'}",
    )


def _cmd_cover(args, kind) -> CommandResult:
    try:
        cloud = load_cloud(args.cloud)
        rep = greedy_cover(cloud, args.eps)
    except (OSError, ValueError) as exc:
        raise _BadInput(str(exc)) from exc
    artifacts = ()
    if args.out:
        _dump_json(args.out, {"count": rep.count, "eps": args.eps,
                              "method": rep.method})
        artifacts = (args.out,)
    return CommandResult(EXIT_OK, artifacts, f"count {rep.count}")


def _cmd_dim(args, kind) -> CommandResult:
    try:
        cloud = load_cloud(args.cloud)
        grid = [float(t) for t in args.eps_grid.split(",") if t.strip()]
        slope, diag = minkowski_slope(cloud, grid)
    except (OSError, ValueError) as exc:
        raise _BadInput(str(exc)) from exc
    artifacts = ()
    if args.out:
        _dump_json(args.out, {"slope": slope, "counts": diag["counts"]})
        artifacts = (args.out,)
    return CommandResult(EXIT_OK, artifacts, f"dimension slope {slope:.3f}")


def _cmd_erm_sweep(args, kind) -> CommandResult:
    try:
        target = load_target(_load_json(args.target))
        grid = tuple(int(t) for t in args.n_grid.split(",") if t.strip())
        cfg = RegressionConfig(target=target, d=args.d, sigma=args.sigma,
                               n_grid=grid, trials=args.trials,
                               seed=args.seed)
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    import torch

    torch.set_num_threads(max(1, args.threads))
    rep = rate_experiment(cfg, csv_path=args.report)
    artifacts = (args.report,)
    if args.summary:
        _dump_json(args.summary, rep.to_json())
        artifacts += (args.summary,)
    code = EXIT_OK if rep.passed() else EXIT_ASSERTION
    return CommandResult(
        code, artifacts,
        f"slope {rep.slope:.3f}, band [{rep.band[0]:.3f}, {rep.band[1]:.3f}]",
    )


def _cmd_verify(args, kind) -> CommandResult:
    net = _deserialize_file(args.net)
    try:
        instance = load_instance(_load_json(args.instance))
    except ValueError as exc:
        raise _BadInput(str(exc)) from exc
    worst = 0.0
    for x, y in instance.samples:
        try:
            got = evaluate(net, list(x))[0]
        except ValueError as exc:
            raise _BadInput(str(exc)) from exc
        worst = max(worst, abs(float(got - y)))
    if worst > args.tol:
        return CommandResult(EXIT_ASSERTION, (),
                             f"recall error {worst} exceeds {args.tol}")
    return CommandResult(EXIT_OK, (), f"recall error {worst} <= {args.tol}")


_DISPATCH = {
    "eval": _cmd_eval,
    "memorize": _cmd_memorize,
    "approx": _cmd_approx,
    "compose": _cmd_compose,
    "cover": _cmd_cover,
    "dim": _cmd_dim,
    "erm-sweep": _cmd_erm_sweep,
    "verify": _cmd_verify,
}


def run(argv) -> CommandResult:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return CommandResult(code if code else EXIT_OK, (), "usage error")
    try:
        kind = ScalarKind.from_tag(args.scalar)
    except ValueError as exc:
        return CommandResult(EXIT_USAGE, (), f"usage error: {exc}")
    try:
        return _DISPATCH[args.command](args, kind)
    except _BadInput as exc:
        return CommandResult(EXIT_BAD_INPUT, (), f"invalid input: {exc}")


def main(argv=None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    print(result.summary)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
