"""Trace serialization: per-seed CSVs, aggregate CSV, manifest JSON, figures.

CSV is the machine-readable contract.  All numbers are written with repr()
(shortest round-trip), so identical runs produce byte-identical files.  The
elapsed_s column is 0.0 unless timing mode is requested: real wall-clock times
would break the byte-determinism guarantee, so they live in the manifest's
per-seed summaries instead.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .benchmarks import ExperimentResult

CSV_HEADER = "iter,oracle_calls,rel_acc,f_gap,elapsed_s"
AGG_HEADER = "iter,oracle_calls,rel_acc_mean,rel_acc_min,rel_acc_max"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def seed_csv_name(seed: int) -> str:
    return f"seed-{seed}.csv"


def write_seed_csv(path: Path, result, timing: bool = False) -> None:
    rows = [CSV_HEADER]
    for i in range(len(result.iterations)):
        elapsed = result.elapsed[i] if timing else 0.0
        rows.append(
            ",".join(
                (
                    _fmt(result.iterations[i]),
                    _fmt(result.oracle_calls[i]),
                    _fmt(result.rel_acc[i]),
                    _fmt(result.f_gap[i]),
                    _fmt(elapsed),
                )
            )
        )
    path.write_text("\n".join(rows) + "\n")


def write_aggregate_csv(path: Path, result: ExperimentResult) -> None:
    rows = [AGG_HEADER]
    for i in range(len(result.agg_iterations)):
        rows.append(
            ",".join(
                (
                    _fmt(result.agg_iterations[i]),
                    _fmt(result.agg_oracle_calls[i]),
                    _fmt(result.rel_acc_mean[i]),
                    _fmt(result.rel_acc_min[i]),
                    _fmt(result.rel_acc_max[i]),
                )
            )
        )
    path.write_text("\n".join(rows) + "\n")


def build_manifest(
    result: ExperimentResult,
    files: list[str],
    workers: int,
    timing: bool,
) -> dict:
    resolved = result.resolved
    config = asdict(resolved.config)
    config["seeds"] = list(resolved.config.seeds)
    return {
        "toolkit_version": __version__,
        "config": config,
        "resolved": {
            "n_iters": resolved.n_iters,
            "batch": resolved.batch,
            "smoothing": resolved.smoothing,
            "delta_budget": resolved.delta_budget,
            "delta": resolved.delta,
            "sigma2": resolved.sigma2,
            "gamma": resolved.gamma,
            "theta_p": resolved.theta_p,
            "theta_1": resolved.theta_1,
            "record_every": resolved.record_every,
            "gap0": resolved.gap0,
            "stop_gap": resolved.stop_gap,
        },
        "seeds": list(resolved.config.seeds),
        "stop_iteration": max(r.stop_iteration for r in result.seed_results),
        "per_seed": [
            {
                "seed": r.seed,
                "final_rel_acc": float(r.rel_acc[-1]),
                "oracle_calls": int(r.total_oracle_calls),
                "runtime_seconds": r.runtime_seconds,
                "stop_iteration": r.stop_iteration,
            }
            for r in result.seed_results
        ],
        "workers": workers,
        "timing": timing,
        "files": files,
    }


def render_convergence_figure(path: Path, result: ExperimentResult, title: str) -> None:
    """Mean relative-accuracy curve with the min/max envelope, two panels."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, xs, xlabel in (
        (axes[0], result.agg_iterations, "iteration"),
        (axes[1], result.agg_oracle_calls, "oracle calls"),
    ):
        ax.plot(xs, result.rel_acc_mean, lw=1.5)
        ax.fill_between(xs, result.rel_acc_min, result.rel_acc_max, alpha=0.25)
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel("relative accuracy")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_comparison_figure(
    path: Path,
    curves: list[tuple[str, np.ndarray, np.ndarray]],
    title: str,
    xlabel: str = "iteration",
) -> None:
    """Overlay mean curves, one per labelled run (used by the gamma sweep)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, xs, ys in curves:
        ax.plot(xs, ys, lw=1.4, label=label)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("relative accuracy")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_run_outputs(
    result: ExperimentResult,
    out_dir: Path,
    workers: int = 1,
    timing: bool = False,
    plot: bool = True,
    title: Optional[str] = None,
) -> dict:
    """Write all artifacts of one experiment; returns the manifest dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for seed_result in result.seed_results:
        name = seed_csv_name(seed_result.seed)
        write_seed_csv(out_dir / name, seed_result, timing=timing)
        files.append(name)
    write_aggregate_csv(out_dir / "aggregate.csv", result)
    files.append("aggregate.csv")
    if plot:
        cfg = result.resolved.config
        label = title or f"{cfg.solver} p={cfg.p} n={cfg.n}"
        render_convergence_figure(out_dir / "convergence.png", result, label)
        files.append("convergence.png")
    manifest = build_manifest(result, files, workers=workers, timing=timing)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
