"""Sphere sampler distribution and gradient-estimator contracts."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from dfds.estimator import (
    GradientEstimate,
    SphereSampler,
    estimate_gradient,
    sample_sphere,
    sphere_moment_check,
)
from dfds.oracle import NoisyProblem, OracleLedger


def exact_problem(fn, dim):
    return NoisyProblem(
        dim=dim, value_stochastic=lambda x, seed: fn(x), lipschitz_grad=1.0
    )


def test_dim_one_sampler_is_sign():
    sampler = SphereSampler(1, seed=0)
    values = {float(sample_sphere(sampler)[0]) for _ in range(50)}
    assert values <= {1.0, -1.0}
    assert len(values) == 2


def test_samples_have_unit_norm():
    sampler = SphereSampler(13, seed=3)
    for _ in range(200):
        assert np.linalg.norm(sampler.sample()) == pytest.approx(1.0, rel=1e-12)
    batch = sampler.sample_batch(500)
    assert np.allclose(np.linalg.norm(batch, axis=1), 1.0, rtol=1e-12)


def test_coordinate_means_vanish_dim8():
    sampler = SphereSampler(8, seed=11)
    batch = sampler.sample_batch(100_000)
    tol = 3.0 * (1.0 / math.sqrt(8e5)) * math.sqrt(8)
    assert np.abs(batch.mean(axis=0)).max() <= tol


def test_projected_second_moment_dim100():
    # E <s, e>^2 = ||s||^2 / n for sphere-uniform e
    sampler = SphereSampler(100, seed=21)
    s = np.random.default_rng(5).standard_normal(100)
    batch = sampler.sample_batch(100_000)
    empirical = float(((batch @ s) ** 2).mean())
    expected = float(s @ s) / 100.0
    assert empirical == pytest.approx(expected, rel=0.05)


def test_linear_objective_is_exact():
    c = np.array([2.0, -1.0, 0.5, 4.0])
    prob = exact_problem(lambda x: float(c @ x), 4)
    sampler = SphereSampler(4, seed=7)
    g = estimate_gradient(prob, np.zeros(4), 0.37, 1, sampler, lambda i: 0, OracleLedger())
    expected = float(c @ g.direction) * g.direction
    assert np.allclose(g.vector, expected, rtol=1e-13, atol=1e-15)


def test_quadratic_at_origin_gives_half_t():
    prob = exact_problem(lambda x: 0.5 * float(x @ x), 6)
    sampler = SphereSampler(6, seed=9)
    t = 1e-3
    g = estimate_gradient(prob, np.zeros(6), t, 1, sampler, lambda i: 0, OracleLedger())
    assert np.allclose(g.vector, (t / 2.0) * g.direction, rtol=1e-9)


def test_unbiased_on_linear_objective():
    n, samples = 20, 20_000
    c = np.random.default_rng(3).standard_normal(n)
    prob = exact_problem(lambda x: float(c @ x), n)
    sampler = SphereSampler(n, seed=17)
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
    assert np.all(np.abs(mean - c) <= 3.0 * se)


def test_collinearity_invariant():
    rng = np.random.default_rng(2)
    prob = exact_problem(lambda x: float(np.sin(x).sum()), 30)
    sampler = SphereSampler(30, seed=2)
    for _ in range(20):
        x = rng.standard_normal(30)
        g = estimate_gradient(prob, x, 1e-4, 1, sampler, lambda i: 0, OracleLedger())
        residual = g.vector - float(g.vector @ g.direction) * g.direction
        assert np.linalg.norm(residual) <= 1e-10 * max(np.linalg.norm(g.vector), 1e-30)


@pytest.mark.parametrize("n", [8, 100, 1000])
@pytest.mark.parametrize("q", [2.0, math.inf])
def test_sphere_moment_bounds_quick(n, q):
    check = sphere_moment_check(n, q, samples=20_000, seed=0)
    assert check.passed, (check.norm_mean, check.rho_bound)
    if q == 2.0:
        assert check.norm_mean == pytest.approx(1.0, abs=1e-12)


def test_moment_check_rejects_small_dims():
    with pytest.raises(ValueError):
        sphere_moment_check(7, 2.0, samples=10)


def test_determinism_same_seeds():
    c = np.arange(1.0, 9.0)
    prob = exact_problem(lambda x: float(c @ x), 8)
    results = []
    for _ in range(2):
        sampler = SphereSampler(8, seed=123)
        g = estimate_gradient(
            prob, np.ones(8), 0.1, 4, sampler, lambda i: 1000 + i, OracleLedger()
        )
        results.append(g.vector.copy())
    assert np.array_equal(results[0], results[1])


def test_batch_shares_one_direction():
    seen_shifted = []

    def spy_value(x, seed):
        if np.any(x != 0.0):
            seen_shifted.append(x.copy())
        return 0.0

    prob = NoisyProblem(dim=5, value_stochastic=spy_value, lipschitz_grad=1.0)
    sampler = SphereSampler(5, seed=4)
    estimate_gradient(prob, np.zeros(5), 0.5, 6, sampler, lambda i: i, OracleLedger())
    assert len(seen_shifted) == 6
    for pt in seen_shifted[1:]:
        assert np.array_equal(pt, seen_shifted[0])


def test_parallel_batch_matches_serial():
    rng = np.random.default_rng(8)
    c = rng.standard_normal(12)

    def value(x, seed):
        jitter = np.random.default_rng(seed).normal(0.0, 0.1)
        return float(c @ x) + jitter * float(x.sum())

    prob = NoisyProblem(dim=12, value_stochastic=value, lipschitz_grad=1.0, sigma2=0.01)
    x = rng.standard_normal(12)

    def run(pool):
        sampler = SphereSampler(12, seed=77)
        ledger = OracleLedger()
        g = estimate_gradient(prob, x, 0.05, 16, sampler, lambda i: 50 + i, ledger, pool)
        return g.vector, ledger.calls

    serial_vec, serial_calls = run(None)
    with ThreadPoolExecutor(max_workers=4) as pool:
        parallel_vec, parallel_calls = run(pool)
    assert np.array_equal(serial_vec, parallel_vec)
    assert serial_calls == parallel_calls == 16


def test_ledger_advances_by_batch_size():
    prob = exact_problem(lambda x: 0.0, 3)
    ledger = OracleLedger()
    estimate_gradient(prob, np.zeros(3), 1.0, 7, SphereSampler(3, seed=0), lambda i: i, ledger)
    assert ledger.calls == 7


def test_invalid_arguments():
    prob = exact_problem(lambda x: 0.0, 3)
    sampler = SphereSampler(3, seed=0)
    with pytest.raises(ValueError):
        estimate_gradient(prob, np.zeros(3), 0.0, 1, sampler, lambda i: i, OracleLedger())
    with pytest.raises(ValueError):
        estimate_gradient(prob, np.zeros(3), 1.0, 0, sampler, lambda i: i, OracleLedger())
    with pytest.raises(ValueError):
        SphereSampler(0)


def test_estimate_fields():
    prob = exact_problem(lambda x: float(x.sum()), 4)
    g = estimate_gradient(
        prob, np.zeros(4), 0.25, 3, SphereSampler(4, seed=1), lambda i: i, OracleLedger()
    )
    assert isinstance(g, GradientEstimate)
    assert g.batch_size == 3
    assert g.smoothing == 0.25
    assert np.linalg.norm(g.direction) == pytest.approx(1.0, rel=1e-12)
