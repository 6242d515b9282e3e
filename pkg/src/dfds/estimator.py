"""Uniform sphere sampling and the batched two-point finite-difference estimator.

The gradient surrogate at x is

    (1/m) * sum_i [ftilde(x + t*e, xi_i) - ftilde(x, xi_i)] / t * e,

with a single direction e drawn uniformly from the unit Euclidean sphere and
shared across the whole batch, while the m realizations xi_i are independent.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .oracle import Array, NoisyProblem, OracleLedger, evaluate_pair
from .prox import rho


class SphereSampler:
    """Draws unit vectors uniformly from the Euclidean sphere in R^n.

    Uses the normalized-Gaussian representation: a standard normal vector
    divided by its norm is exactly sphere-uniform in any dimension.  A sampler
    owns its generator state; one solver run owns one sampler.
    """

    def __init__(self, dim: int, seed: Optional[int] = None) -> None:
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = dim
        self._rng = np.random.default_rng(seed)

    def sample(self) -> Array:
        while True:
            v = self._rng.standard_normal(self.dim)
            nrm = float(np.linalg.norm(v))
            if nrm > 0.0:  # all-zero draw has probability 0; redraw if seen
                return v / nrm

    def sample_batch(self, count: int) -> Array:
        """(count, dim) array of independent unit vectors."""
        v = self._rng.standard_normal((count, self.dim))
        norms = np.linalg.norm(v, axis=1)
        while np.any(norms == 0.0):
            bad = norms == 0.0
            v[bad] = self._rng.standard_normal((int(bad.sum()), self.dim))
            norms = np.linalg.norm(v, axis=1)
        return v / norms[:, None]


def sample_sphere(sampler: SphereSampler) -> Array:
    """One sphere-uniform unit vector; advances the sampler state."""
    return sampler.sample()


@dataclass(frozen=True)
class GradientEstimate:
    """Batched finite-difference gradient surrogate, collinear with ``direction``."""

    vector: Array
    direction: Array
    batch_size: int
    smoothing: float


def estimate_gradient(
    problem: NoisyProblem,
    x: Array,
    t: float,
    m: int,
    sampler: SphereSampler,
    seeds: Callable[[int], int],
    ledger: OracleLedger,
    pool: Optional[Executor] = None,
) -> GradientEstimate:
    """Estimate the gradient at x from m two-point oracle calls.

    ``seeds`` maps the batch index i to the xi-seed of that element; callers
    derive it from a SeedStream so results do not depend on evaluation order.
    The m pair evaluations may fan out to ``pool``; the differences are summed
    in fixed index order so the estimate is reproducible under any worker
    count.  The ledger advances by exactly m.
    """
    if t <= 0:
        raise ValueError("smoothing parameter t must be positive")
    if m < 1:
        raise ValueError("batch size m must be at least 1")
    x = np.asarray(x, dtype=float)
    e = sampler.sample()
    x_shift = x + t * e

    def pair_diff(i: int) -> float:
        v_base, v_shift = evaluate_pair(problem, x, x_shift, seeds(i), ledger)
        return v_shift - v_base

    if pool is None or m == 1:
        diffs = [pair_diff(i) for i in range(m)]
    else:
        diffs = list(pool.map(pair_diff, range(m)))
    coeff = math.fsum(diffs) / (m * t)
    return GradientEstimate(
        vector=coeff * e, direction=e, batch_size=m, smoothing=t
    )


@dataclass(frozen=True)
class MomentCheck:
    """Monte Carlo comparison of sphere moments against their theoretical bounds.

    Checks E||e||_q^2 <= rho_n and E(<s,e>^2 ||e||_q^2) <= (6 rho_n / n)||s||_2^2
    for sphere-uniform e, n >= 8.  ``passed`` means both empirical means stay
    within +3 standard errors of their bounds.
    """

    n: int
    q: float
    samples: int
    rho_bound: float
    norm_mean: float
    norm_se: float
    cross_bound: float
    cross_mean: float
    cross_se: float

    @property
    def norm_ok(self) -> bool:
        return self.norm_mean <= self.rho_bound + 3.0 * self.norm_se

    @property
    def cross_ok(self) -> bool:
        return self.cross_mean <= self.cross_bound + 3.0 * self.cross_se

    @property
    def passed(self) -> bool:
        return self.norm_ok and self.cross_ok


def sphere_moment_check(
    n: int,
    q: float,
    samples: int = 100_000,
    seed: int = 0,
    chunk: int = 20_000,
) -> MomentCheck:
    """Empirically verify the dual-norm moment bounds for dimension n.

    The first moment uses ||e||_q^2; the second uses <s,e>^2 ||e||_q^2 for a
    fixed random direction s on the unit sphere (both bounds scale with
    ||s||_2^2, so a unit s loses no generality).
    """
    bound = rho(n, q)  # raises for n < 8, outside the bounds' validity
    q = float(q)
    sampler = SphereSampler(n, seed=seed)
    s = sampler.sample()

    norm_sum = 0.0
    norm_sq_sum = 0.0
    cross_sum = 0.0
    cross_sq_sum = 0.0
    remaining = samples
    while remaining > 0:
        k = min(chunk, remaining)
        e = sampler.sample_batch(k)
        if math.isinf(q):
            norm_q2 = np.max(np.abs(e), axis=1) ** 2
        else:
            norm_q2 = np.linalg.norm(e, ord=q, axis=1) ** 2
        cross = (e @ s) ** 2 * norm_q2
        norm_sum += float(norm_q2.sum())
        norm_sq_sum += float((norm_q2**2).sum())
        cross_sum += float(cross.sum())
        cross_sq_sum += float((cross**2).sum())
        remaining -= k

    norm_mean = norm_sum / samples
    cross_mean = cross_sum / samples
    norm_var = max(norm_sq_sum / samples - norm_mean**2, 0.0)
    cross_var = max(cross_sq_sum / samples - cross_mean**2, 0.0)
    return MomentCheck(
        n=n,
        q=q,
        samples=samples,
        rho_bound=bound,
        norm_mean=norm_mean,
        norm_se=math.sqrt(norm_var / samples),
        cross_bound=6.0 * bound / n,
        cross_mean=cross_mean,
        cross_se=math.sqrt(cross_var / samples),
    )
