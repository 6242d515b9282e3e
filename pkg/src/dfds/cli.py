"""Command-line front end: plan parameters, run experiments, verify sampler bounds.

Subcommands:
    plan           print the planned (N, m, t, delta) for a method and geometry
    run            run a benchmark experiment, write CSV traces + manifest + figure
    verify-lemma1  Monte Carlo check of the sphere moment bounds
    gamma-grid     sweep the stepsize scale gamma, one aggregate per value

Exit codes: 2 usage error, 3 unwritable output directory, 4 solver abort.
The DFDS_OUT_DIR environment variable sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional

from .benchmarks import (
    ExperimentAbort,
    ExperimentConfig,
    NesterovProblem,
    make_x0,
    run_experiment,
)
from .estimator import sphere_moment_check
from .prox import RHO_MIN_DIM, ProxSetup, bregman
from .solvers import plan_parameters
from . import report

EXIT_USAGE = 2
EXIT_OUTPUT_DIR = 3
EXIT_SOLVER_ABORT = 4


def _default_out_dir() -> str:
    return os.environ.get("DFDS_OUT_DIR", "dfds-out")


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_q_list(text: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        out.append(math.inf if tok in ("inf", "infinity") else float(tok))
    return out


# ---------------------------------------------------------------------------
# plan


def _add_plan_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--method", choices=["ardfds", "rdfds"], required=True)
    sub.add_argument("--p", type=int, choices=[1, 2], required=True)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--eps", type=float, required=True)
    sub.add_argument("--L2", type=float, required=True)
    sub.add_argument("--sigma2", type=float, default=0.0)
    sub.add_argument("--theta", type=float, default=None,
                     help="Bregman radius Theta_p; required unless --preset is given")
    sub.add_argument("--preset", choices=["nesterov"], default=None,
                     help="compute Theta_p from the benchmark problem geometry")
    sub.add_argument("--delta-actual", type=float, default=None,
                     help="known noise level; floors t at 2*sqrt(delta/L2)")
    sub.add_argument("--c-scale", type=float, default=1.0)


def cmd_plan(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    theta = args.theta
    if theta is None:
        if args.preset != "nesterov":
            parser.error("either --theta or --preset nesterov is required")
        prob = NesterovProblem(args.n, args.L2)
        x0 = make_x0(prob)
        theta = bregman(ProxSetup(p=args.p, dim=args.n), x0, prob.x_star)
    try:
        params, delta_budget = plan_parameters(
            eps=args.eps,
            L2=args.L2,
            sigma2=args.sigma2,
            theta_p=theta,
            n=args.n,
            p=args.p,
            c_scale=args.c_scale,
            method=args.method,
            delta_actual=args.delta_actual,
        )
    except ValueError as exc:
        parser.error(str(exc))
    rows = [
        ("iterations N", params.n_iters),
        ("batch m", params.batch),
        ("smoothing t", params.smoothing),
        ("delta budget", delta_budget),
        ("theta_p", theta),
    ]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {value}")
    print(
        json.dumps(
            {
                "method": args.method,
                "p": args.p,
                "n": args.n,
                "eps": args.eps,
                "L2": args.L2,
                "sigma2": args.sigma2,
                "theta_p": theta,
                "c_scale": args.c_scale,
                "n_iters": params.n_iters,
                "batch": params.batch,
                "smoothing": params.smoothing,
                "delta_budget": delta_budget,
            },
            sort_keys=True,
        )
    )
    return 0


# ---------------------------------------------------------------------------
# run / gamma-grid


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _load_config_file(path: str, parser: argparse.ArgumentParser) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    if isinstance(doc, dict) and "config" in doc and "toolkit_version" in doc:
        doc = doc["config"]  # a manifest: re-run from its config echo
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    return doc


def _add_run_args(sub: argparse.ArgumentParser, gamma_grid: bool = False) -> None:
    sub.add_argument("--config", default=None,
                     help="flat JSON config file, or a manifest.json to re-run")
    sub.add_argument("--solver", choices=["ardfds", "rdfds", "rspgf"], default=None)
    sub.add_argument("--p", type=int, choices=[1, 2], default=None)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--L2", type=float, default=None)
    sub.add_argument("--eps", type=float, default=None)
    if gamma_grid:
        sub.add_argument("--gammas", type=_parse_float_list, required=True,
                         help="comma-separated stepsize scales to sweep")
    else:
        sub.add_argument("--gamma", type=float, default=None)
    sub.add_argument("--sigma2", type=float, default=None)
    sub.add_argument("--delta", type=float, default=None)
    sub.add_argument("--seeds", type=_parse_int_list, default=None,
                     help="comma-separated seed list (default 0..9)")
    sub.add_argument("--x0-rule", choices=["first-coord-offset", "origin"], default=None)
    sub.add_argument("--c-scale", type=float, default=None)
    sub.add_argument("--n-iters", type=int, default=None)
    sub.add_argument("--batch", type=int, default=None)
    sub.add_argument("--smoothing", type=float, default=None)
    sub.add_argument("--record-every", type=int, default=None)
    sub.add_argument("--until-rel-acc", type=float, default=None,
                     help="stop a seed once its relative accuracy reaches this")
    sub.add_argument("--problem-seed", type=int, default=None)
    sub.add_argument("--workers", type=int, default=1,
                     help="max parallel per-seed runs")
    sub.add_argument("--out", default=None, help=f"output dir (default ${{DFDS_OUT_DIR}} or ./{_default_out_dir()})")
    sub.add_argument("--timing", action="store_true",
                     help="write wall-clock elapsed_s to CSVs (breaks byte determinism)")
    sub.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def _build_config(
    args: argparse.Namespace, parser: argparse.ArgumentParser, gamma: Optional[float]
) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        values.update(_load_config_file(args.config, parser))
    overrides = {
        "solver": args.solver,
        "p": args.p,
        "n": args.n,
        "L2": args.L2,
        "eps": args.eps,
        "gamma": gamma,
        "sigma2": args.sigma2,
        "delta": args.delta,
        "seeds": args.seeds,
        "x0_rule": args.x0_rule,
        "c_scale": args.c_scale,
        "n_iters": args.n_iters,
        "batch": args.batch,
        "smoothing": args.smoothing,
        "record_every": args.record_every,
        "until_rel_acc": args.until_rel_acc,
        "problem_seed": args.problem_seed,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    if "seeds" in values:
        values["seeds"] = tuple(values["seeds"])
    for required in ("solver", "p", "n"):
        if required not in values:
            parser.error(f"missing required option --{required.replace('_', '-')}")
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))
        raise AssertionError  # parser.error raises SystemExit


def _resolve_out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out) if args.out else Path(_default_out_dir())
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_OUTPUT_DIR)
    return out


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _build_config(args, parser, gamma=args.gamma)
    out_dir = _resolve_out_dir(args)
    try:
        result = run_experiment(config, workers=max(1, args.workers))
    except ExperimentAbort as exc:
        print(
            f"solver abort at iteration {exc.iteration} (seed {exc.seed})",
            file=sys.stderr,
        )
        return EXIT_SOLVER_ABORT
    manifest = report.write_run_outputs(
        result,
        out_dir,
        workers=max(1, args.workers),
        timing=args.timing,
        plot=not args.no_plot,
    )
    final = [s["final_rel_acc"] for s in manifest["per_seed"]]
    print(
        f"wrote {len(manifest['files'])} files to {out_dir} "
        f"(stop iteration {manifest['stop_iteration']}, "
        f"mean final rel acc {sum(final) / len(final):.3e})"
    )
    return 0


def cmd_gamma_grid(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out_dir = _resolve_out_dir(args)
    curves = []
    summary = []
    for gamma in args.gammas:
        config = _build_config(args, parser, gamma=gamma)
        try:
            result = run_experiment(config, workers=max(1, args.workers))
        except ExperimentAbort as exc:
            print(
                f"solver abort at iteration {exc.iteration} "
                f"(seed {exc.seed}, gamma={gamma})",
                file=sys.stderr,
            )
            return EXIT_SOLVER_ABORT
        sub = out_dir / f"gamma-{gamma:g}"
        sub.mkdir(parents=True, exist_ok=True)
        report.write_aggregate_csv(sub / "aggregate.csv", result)
        curves.append((f"gamma={gamma:g}", result.agg_iterations, result.rel_acc_mean))
        summary.append(
            {
                "gamma": gamma,
                "final_rel_acc_mean": float(result.rel_acc_mean[-1]),
                "stop_iteration": int(result.agg_iterations[-1]),
            }
        )
        print(f"gamma={gamma:g}: final mean rel acc {summary[-1]['final_rel_acc_mean']:.3e}")
    if not args.no_plot:
        cfg_desc = f"{args.solver} p={args.p} n={args.n}"
        report.render_comparison_figure(
            out_dir / "gamma-grid.png", curves, f"gamma sweep: {cfg_desc}"
        )
    with open(out_dir / "gamma-grid.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# verify-lemma1


def _add_verify_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=_parse_int_list, default=[8, 100, 1000],
                     help="comma-separated dimensions (each >= 8)")
    sub.add_argument("--q", type=_parse_q_list, default=[2.0, math.inf],
                     help="comma-separated dual indices from {2, inf}")
    sub.add_argument("--samples", type=int, default=100_000)
    sub.add_argument("--seed", type=int, default=0)


def cmd_verify_lemma1(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    for n in args.n:
        if n < RHO_MIN_DIM:
            print(
                f"error: n={n} refused; the sphere moment bounds require "
                f"n >= {RHO_MIN_DIM}",
                file=sys.stderr,
            )
            return EXIT_USAGE
    any_fail = False
    for n in args.n:
        for q in args.q:
            check = sphere_moment_check(n, q, samples=args.samples, seed=args.seed)
            status = "PASS" if check.passed else "FAIL"
            any_fail |= not check.passed
            q_label = "inf" if math.isinf(q) else f"{q:g}"
            print(
                f"[{status}] n={n} q={q_label}: "
                f"E||e||_q^2 = {check.norm_mean:.6f} (SE {check.norm_se:.2e}) "
                f"<= {check.rho_bound:.6f}; "
                f"E<s,e>^2||e||_q^2 = {check.cross_mean:.3e} (SE {check.cross_se:.2e}) "
                f"<= {check.cross_bound:.3e}"
            )
    return 1 if any_fail else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfds",
        description="Derivative-free two-point stochastic convex optimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="print planned solver parameters")
    _add_plan_args(plan)
    plan.set_defaults(func=cmd_plan)

    run = sub.add_parser("run", help="run a benchmark experiment")
    _add_run_args(run)
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser(
        "verify-lemma1", help="Monte Carlo check of the sphere moment bounds"
    )
    _add_verify_args(verify)
    verify.set_defaults(func=cmd_verify_lemma1)

    grid = sub.add_parser("gamma-grid", help="sweep the stepsize scale gamma")
    _add_run_args(grid, gamma_grid=True)
    grid.set_defaults(func=cmd_gamma_grid)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # each subparser shares the top-level error conventions
    sub_parser = parser
    return args.func(args, sub_parser)


if __name__ == "__main__":
    sys.exit(main())
