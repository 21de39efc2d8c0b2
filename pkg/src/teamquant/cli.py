"""Command-line entry point: ``teamquant {solve,refine,oracle,evaluate,report}``.

Exit status is 0 on success, 2 for configuration or usage errors, 3 for
numerical failures (non-finite costs, overflowing densities, oversized
enumerations, failed schedule steps).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .evaluator import affine_oracle_witsenhausen, exact_cost, extend_policy, radner_oracle
from .exceptions import (
    ConfigError,
    DensityOverflow,
    InvalidParameter,
    NonFiniteCost,
    NonFiniteValue,
    StepFailed,
    TooLarge,
    UnsupportedKernel,
    UnsupportedVariance,
)
from .experiments import (
    ExperimentConfig,
    apply_env,
    emit_all,
    load_config,
    read_reports,
    reports_to_csv,
    reports_to_json,
    reports_to_plotdata,
    run_schedule,
    solve_step,
)
from .finite import (
    build_finite,
    eval_finite_cost,
    policy_from_dict,
    policy_to_dict,
    quantizers_grids_from_dict,
    uniform_model,
)
from .problems import make_problem, params_from_dict, params_to_dict
from .team import eval_cost_dynamic_mc, static_reduce

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return apply_env(cfg)


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_solve(args):
    cfg = _config(args)
    steps = cfg.schedule.steps
    idx = len(steps) - 1 if args.step is None else args.step
    if not -len(steps) <= idx < len(steps):
        raise ConfigError(f"--step must index one of the {len(steps)} schedule steps")
    idx %= len(steps)
    st = steps[idx]
    problem = make_problem(cfg.problem)
    fm = uniform_model(static_reduce(problem), st.radius, st.n, st.m, st.k,
                       nested=cfg.schedule.nested, quadrature_nodes=cfg.evaluation.quadrature_nodes)
    seed = np.random.SeedSequence([cfg.solver.seed, idx])
    policy, sweeps, solver, termination = solve_step(fm, cfg.solver, seed, None)
    doc = {
        "problem": params_to_dict(cfg.problem),
        **policy_to_dict(policy, fm),
        "finite_cost": eval_finite_cost(fm, policy),
        "solver": solver,
        "termination": termination,
        "sweeps": sweeps,
    }
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_refine(args):
    cfg = _config(args)
    if args.threads is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, threads=args.threads))

    def show(idx, fm, policy, rep):
        exact = "n/a" if rep.exact_cost is None else f"{rep.exact_cost:.6f}"
        print(f"step {idx}: n={rep.n} k={rep.k} finite={rep.finite_cost:.6f} exact={exact} "
              f"mc={rep.mc_cost:.6f}+-{rep.mc_half_ci95:.2g}", file=sys.stderr)

    reports = run_schedule(cfg, on_step=None if args.quiet else show)
    for path in emit_all(reports, cfg, args.output_dir):
        print(path)
    return 0


def cmd_oracle(args):
    if args.problem == "witsenhausen":
        gain, cost = affine_oracle_witsenhausen(args.weight)
        print(json.dumps({"problem": "witsenhausen", "weight": args.weight, "gain": gain, "cost": cost}))
    else:
        gain, cost = radner_oracle(args.r)
        print(json.dumps({"problem": "radner", "r": args.r, "gain": gain, "cost": cost}))
    return 0


def cmd_evaluate(args):
    try:
        doc = json.loads(Path(args.policy).read_text(encoding="utf-8"))
        params = params_from_dict(doc["problem"])
        table = policy_from_dict(doc)
        quantizers, grids = quantizers_grids_from_dict(doc)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot load policy file {args.policy}: {exc}") from None
    problem = make_problem(params)
    fm = build_finite(static_reduce(problem), quantizers, grids)
    fm.check_policy(table)
    ext = extend_policy(table, quantizers)
    mc, ci = eval_cost_dynamic_mc(problem, ext, args.mc_samples, args.seed)
    print(json.dumps({
        "finite_cost": eval_finite_cost(fm, table),
        "exact_cost": exact_cost(problem, ext),
        "mc_cost": mc,
        "mc_half_ci95": ci,
    }))
    return 0


def cmd_report(args):
    cfg, reports = read_reports(args.reports)
    if args.format == "csv":
        text = reports_to_csv(reports)
    elif args.format == "json":
        text = reports_to_json(reports, cfg)
    else:
        text = reports_to_plotdata(reports)
    _write(text, args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="teamquant", description="Quantized team decision solvers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one schedule step and print its policy as JSON")
    p.add_argument("-c", "--config")
    p.add_argument("--step", type=int, help="schedule step (default: last)")
    p.add_argument("-o", "--output", help="policy file (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("refine", help="run the whole refinement schedule and write reports")
    p.add_argument("-c", "--config")
    p.add_argument("-d", "--output-dir")
    p.add_argument("--threads", type=int)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("oracle", help="analytic reference cost")
    p.add_argument("problem", choices=("witsenhausen", "radner"))
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="exact and Monte Carlo cost of a saved policy")
    p.add_argument("policy")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="convert a JSON report file")
    p.add_argument("reports")
    p.add_argument("-f", "--format", choices=("csv", "json", "plotdata"), default="csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter, UnsupportedKernel, UnsupportedVariance) as exc:
        print(f"teamquant: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailed, NonFiniteCost, NonFiniteValue, DensityOverflow, TooLarge) as exc:
        print(f"teamquant: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
