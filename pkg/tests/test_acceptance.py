"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Criterion 7's n=5000 variant carries the `slow` marker and is
excluded from the default run (`pytest -m slow` to include it).
"""

import math
import time

import numpy as np
import pytest
from oracles import mirror_subproblem_oracle

from dfds import cli
from dfds.benchmarks import (
    ExperimentConfig,
    NesterovProblem,
    as_noisy_problem,
    make_x0,
    nesterov_value,
    run_experiment,
)
from dfds.estimator import SphereSampler, estimate_gradient, sphere_moment_check
from dfds.oracle import NoisyProblem, OracleLedger
from dfds.prox import ProxSetup, mirror_step, prox_gradient
from dfds.solvers import SolverParams, ardfds, plan_parameters, rdfds


def report(num, name, ok, detail=""):
    print(f"\nACCEPTANCE {num} [{name}]: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


# ---------------------------------------------------------------------------


def test_criterion_1_exact_values():
    start = time.perf_counter()
    worst = 0.0
    for n in (4, 100, 1000):
        prob = NesterovProblem(n, 10.0)
        direct = nesterov_value(prob, prob.x_star)
        worst = max(worst, abs(direct - prob.f_star) / abs(prob.f_star))
    f_star_ok = worst <= 1e-12

    prob = NesterovProblem(100, 10.0)
    gap = float(nesterov_value(prob, make_x0(prob)) - prob.f_star)
    gap_ok = abs(gap - 250.0) <= 1e-9 * 250.0
    elapsed = time.perf_counter() - start
    report(
        1,
        "exact values",
        f_star_ok and gap_ok and elapsed < 1.0,
        f"worst f* rel err {worst:.2e}, initial gap {gap!r}, {elapsed:.2f}s",
    )


def test_criterion_2_sphere_moment_bounds():
    start = time.perf_counter()
    details = []
    ok = True
    for n in (8, 100, 1000):
        for q in (2.0, math.inf):
            check = sphere_moment_check(n, q, samples=100_000, seed=0)
            ok &= check.passed
            if q == 2.0:
                ok &= abs(check.norm_mean - 1.0) <= 1e-12
            details.append(
                f"n={n} q={'inf' if math.isinf(q) else 2}: "
                f"{check.norm_mean:.4f}<={check.rho_bound:.4f}"
            )
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    report(2, "sphere moment bounds", ok, "; ".join(details) + f", {elapsed:.1f}s")


def test_criterion_3_estimator_statistics():
    start = time.perf_counter()
    n, samples = 50, 100_000
    c = np.random.default_rng(2024).standard_normal(n)
    prob = NoisyProblem(
        dim=n, value_stochastic=lambda x, seed: float(c @ x), lipschitz_grad=1.0
    )
    sampler = SphereSampler(n, seed=31)
    ledger = OracleLedger()
    x = np.zeros(n)
    acc = np.zeros(n)
    acc_sq = np.zeros(n)
    for _ in range(samples):
        v = n * estimate_gradient(prob, x, 1.0, 1, sampler, lambda i: 0, ledger).vector
        acc += v
        acc_sq += v * v
    mean = acc / samples
    se = np.sqrt(np.maximum(acc_sq / samples - mean**2, 0.0) / samples)
    deviations = np.abs(mean - c) / se
    elapsed = time.perf_counter() - start
    ok = bool(np.all(deviations <= 3.0)) and elapsed < 10.0
    report(
        3,
        "estimator unbiasedness",
        ok,
        f"max |mean - c|/SE = {deviations.max():.2f} over {n} coords, {elapsed:.1f}s",
    )


def test_criterion_4_mirror_step_oracle_equivalence():
    start = time.perf_counter()
    worst_dist = 0.0
    worst_res = 0.0
    for n in (10, 100):
        setup = ProxSetup(p=1, dim=n)
        rng = np.random.default_rng(42)
        for _ in range(100):  # 100 pairs per dimension, 200 total
            z = rng.standard_normal(n)
            s = rng.standard_normal(n) * setup.a_n
            closed = mirror_step(setup, z, s)
            numeric, _ = mirror_subproblem_oracle(setup, z, s)
            worst_dist = max(worst_dist, float(np.linalg.norm(closed - numeric)))
            residual = prox_gradient(setup, closed) - prox_gradient(setup, z) + s
            worst_res = max(
                worst_res,
                float(np.linalg.norm(residual)) / (1.0 + float(np.linalg.norm(s))),
            )
    elapsed = time.perf_counter() - start
    ok = worst_dist <= 1e-6 and worst_res <= 1e-8 and elapsed < 60.0
    report(
        4,
        "mirror-step oracle equivalence",
        ok,
        f"worst distance {worst_dist:.2e}, worst scaled residual {worst_res:.2e}, "
        f"{elapsed:.1f}s",
    )


def _deterministic_nesterov(n):
    prob = NesterovProblem(n, 10.0)
    noisy = as_noisy_problem(prob)
    return prob, noisy, noisy.metrics_probe(prob.f_star), make_x0(prob)


def test_criterion_5_ardfds_rate_regression():
    start = time.perf_counter()
    n, n0 = 100, 1600  # calibrated: clean gap ~1e-2 of initial at N0
    prob, noisy, metrics, x0 = _deterministic_nesterov(n)
    ratios = []
    rel_at_n0 = []
    gap0 = metrics.gap(x0)
    for seed in range(10):
        params = SolverParams(
            n_iters=2 * n0, batch=1, smoothing=1e-5, lipschitz_grad=10.0,
            setup=ProxSetup(p=2, dim=n), gamma=8.0, base_seed=seed,
        )
        _, trace = ardfds(noisy, params, x0, metrics=metrics, record_every=n0)
        gaps = dict(zip(trace.iterations, trace.f_gaps))
        ratios.append(gaps[2 * n0] / gaps[n0])
        rel_at_n0.append(gaps[n0] / gap0)
    mean_ratio = float(np.mean(ratios))
    elapsed = time.perf_counter() - start
    ok = mean_ratio <= 1.0 / 3.0 and elapsed < 300.0
    report(
        5,
        "accelerated rate regression",
        ok,
        f"mean gap(2N0)/gap(N0) = {mean_ratio:.3f} (<= 0.333), "
        f"mean rel@N0 = {np.mean(rel_at_n0):.2e}, {elapsed:.1f}s",
    )


def test_criterion_6_rdfds_rate_regression():
    # The returned point is the running iterate average, so the regression is
    # on its clean gap.  N0 = 500 is frozen by calibration: that is the
    # mid-transient window where the averaged gap tracks the 1/N-term regime
    # (later the quadratic objective makes the average decay faster than 1/N).
    start = time.perf_counter()
    n, n0 = 100, 500
    prob, noisy, metrics, x0 = _deterministic_nesterov(n)
    ratios = []
    for seed in range(10):
        snaps = {}

        def grab(k, state, calls, snaps=snaps):
            if state.k in (n0, 2 * n0):
                snaps[state.k] = state.average.copy()

        params = SolverParams(
            n_iters=2 * n0, batch=1, smoothing=1e-5, lipschitz_grad=10.0,
            setup=ProxSetup(p=2, dim=n), gamma=32.0, base_seed=seed,
        )
        rdfds(noisy, params, x0, metrics=metrics, callback=grab, record_every=2 * n0)
        ratios.append(metrics.gap(snaps[2 * n0]) / metrics.gap(snaps[n0]))
    mean_ratio = float(np.mean(ratios))
    elapsed = time.perf_counter() - start
    ok = 0.35 <= mean_ratio <= 0.7 and elapsed < 300.0
    report(
        6,
        "non-accelerated rate regression",
        ok,
        f"mean gap(2N0)/gap(N0) = {mean_ratio:.3f} (in [0.35, 0.7]), {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 7: experiment reproduction


REL_TARGET = 1e-5

# iteration caps hold >=2x margin over calibration runs; the planner's
# worst-case N values would be ~5e8 for the non-accelerated methods
CAPS_1000 = {
    ("ardfds", 2): 250_000,
    ("ardfds", 1): 120_000,
    ("rdfds", 2): 900_000,
    ("rdfds", 1): 600_000,
    ("rspgf", 2): 150_000,
}
CAPS_5000 = {
    ("ardfds", 2): 1_200_000,
    ("ardfds", 1): 250_000,
    ("rdfds", 2): 3_500_000,
    ("rdfds", 1): 1_500_000,
    ("rspgf", 2): 650_000,
}


def _reproduction_run(n, caps, seeds, record_every, workers=2):
    outcomes = {}
    for (solver, p), cap in caps.items():
        config = ExperimentConfig(
            solver=solver, p=p, n=n, L2=10.0, eps=1e-3, seeds=seeds,
            n_iters=cap, record_every=record_every, until_rel_acc=REL_TARGET,
        )
        result = run_experiment(config, workers=workers)
        stops = [r.stop_iteration for r in result.seed_results]
        finals = [float(r.rel_acc[-1]) for r in result.seed_results]
        outcomes[(solver, p)] = {
            "cap": cap,
            "mean_stop": float(np.mean(stops)),
            "max_stop": max(stops),
            "reached": all(f <= REL_TARGET for f in finals),
            "worst_final": max(finals),
        }
    return outcomes


def _check_reproduction(num, label, outcomes, elapsed, budget_s):
    methods = [("ardfds", 1), ("ardfds", 2), ("rdfds", 1), ("rdfds", 2)]
    reached = all(outcomes[m]["reached"] for m in methods)

    faster_accel = outcomes[("ardfds", 1)]["mean_stop"] < outcomes[("ardfds", 2)]["mean_stop"]
    faster_plain = outcomes[("rdfds", 1)]["mean_stop"] < outcomes[("rdfds", 2)]["mean_stop"]

    baseline = outcomes[("rspgf", 2)]
    accel_max = max(outcomes[("ardfds", 1)]["max_stop"], outcomes[("ardfds", 2)]["max_stop"])
    # the baseline never reaches the target within a cap that exceeds both
    # accelerated hitting times, so its iterations-to-target is larger
    beats_baseline = (not baseline["reached"]) and baseline["cap"] > accel_max

    detail = "; ".join(
        f"{s} p={p}: stop~{outcomes[(s, p)]['mean_stop']:.0f} final {outcomes[(s, p)]['worst_final']:.1e}"
        for (s, p) in [*methods, ("rspgf", 2)]
    )
    ok = reached and faster_accel and faster_plain and beats_baseline and elapsed < budget_s
    report(num, label, ok, detail + f", {elapsed:.0f}s")


def test_criterion_7_experiment_reproduction_n1000():
    start = time.perf_counter()
    outcomes = _reproduction_run(1000, CAPS_1000, seeds=(0, 1, 2), record_every=500)
    _check_reproduction(
        7, "experiment reproduction n=1000", outcomes, time.perf_counter() - start,
        budget_s=1800.0,
    )


@pytest.mark.slow
def test_criterion_7_experiment_reproduction_n5000():
    start = time.perf_counter()
    outcomes = _reproduction_run(5000, CAPS_5000, seeds=(0,), record_every=2000, workers=1)
    _check_reproduction(
        7, "experiment reproduction n=5000 (slow)", outcomes,
        time.perf_counter() - start, budget_s=7200.0,
    )


# ---------------------------------------------------------------------------


def test_criterion_8_oracle_accounting():
    n, N, m = 100, 3000, 4
    prob, noisy, metrics, x0 = _deterministic_nesterov(n)
    params = SolverParams(
        n_iters=N, batch=m, smoothing=1e-5, lipschitz_grad=10.0,
        setup=ProxSetup(p=2, dim=n), gamma=8.0, base_seed=0,
    )
    ledger_full = OracleLedger()
    ardfds(noisy, params, x0, metrics=metrics, ledger=ledger_full)
    full_ok = ledger_full.calls == N * m

    gap0 = metrics.gap(x0)
    ledger_stop = OracleLedger()
    _, trace = ardfds(
        noisy, params, x0, metrics=metrics, ledger=ledger_stop,
        stop_gap=1e-1 * gap0,
    )
    stop_ok = (
        trace.final_iteration < N
        and ledger_stop.calls == trace.final_iteration * m
    )
    report(
        8,
        "oracle accounting",
        full_ok and stop_ok,
        f"full run {ledger_full.calls} == {N * m}; early stop "
        f"{ledger_stop.calls} == {trace.final_iteration} * {m}",
    )


def test_criterion_9_byte_determinism(tmp_path):
    start = time.perf_counter()
    argv = [
        "run", "--solver", "ardfds", "--p", "1", "--n", "100",
        "--n-iters", "400", "--record-every", "20", "--seeds", "0,1,2,3",
        "--no-plot",
    ]
    contents = {}
    for workers in (1, 8):
        out = tmp_path / f"w{workers}"
        code = cli.main([*argv, "--workers", str(workers), "--out", str(out)])
        assert code == 0
        contents[workers] = {
            p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))
        }
    elapsed = time.perf_counter() - start
    identical = contents[1] == contents[8] and len(contents[1]) == 5
    report(
        9,
        "byte determinism across workers",
        identical and elapsed < 120.0,
        f"{len(contents[1])} CSVs identical between --workers 1 and 8, {elapsed:.1f}s",
    )


def test_criterion_10_noise_robustness():
    start = time.perf_counter()
    n = 100
    _, budget = plan_parameters(1e-3, 10.0, 0.0, 50.0, n, p=2, method="ardfds")
    config = ExperimentConfig(
        solver="ardfds", p=2, n=n, L2=10.0, eps=1e-3, seeds=(0, 1, 2),
        sigma2=0.0, delta=10.0 * budget, n_iters=5000, record_every=100,
    )
    result = run_experiment(config)
    floors = [float(r.rel_acc.min()) for r in result.seed_results]
    elapsed = time.perf_counter() - start
    ok = max(floors) < 1e-2 and elapsed < 300.0
    report(
        10,
        "noise robustness at 10x budget",
        ok,
        f"delta = {10 * budget:.2e}, worst rel-acc floor {max(floors):.2e}, "
        f"{elapsed:.1f}s",
    )
