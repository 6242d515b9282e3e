"""Derivative-free directional-search solvers and their stepsize planner.

``ardfds`` is the accelerated method: it couples a Euclidean gradient-type
step with stepsize 1/(2 L2) to a mirror-descent step with the increasing
schedule alpha_{k+1} = gamma (k+2) / (96 n^2 rho_n L2).  ``rdfds`` is the
non-accelerated mirror-descent-only variant with the constant stepsize
gamma / (48 n rho_n L2), returning the average of its iterates.
``rspgf_baseline`` is a plain Euclidean random-search update included for
experiment comparisons.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import Executor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from .estimator import SphereSampler, estimate_gradient
from .oracle import Array, CleanValueProbe, NoisyProblem, OracleLedger
from .prox import RHO_MIN_DIM, ProxSetup, mirror_step, rho
from .seeding import DIRECTION_STREAM, SeedStream


class SolverAbort(RuntimeError):
    """Raised when a run hits a non-finite objective value.

    Carries the iteration index and the partial trace for diagnostics.
    """

    def __init__(self, iteration: int, trace: "ConvergenceTrace"):
        super().__init__(f"non-finite objective value at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace

    def __reduce__(self):
        return (SolverAbort, (self.iteration, self.trace))


@dataclass
class SolverParams:
    """Iteration budget, batch size, smoothing and stepsize scale of one run.

    ``gamma`` scales the theoretical stepsizes (the coupling weight tau_k is
    never rescaled).  The values are typically produced by
    ``plan_parameters`` or set directly by the caller.
    """

    n_iters: int
    batch: int
    smoothing: float
    lipschitz_grad: float
    setup: ProxSetup
    gamma: float = 1.0
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_iters < 1:
            raise ValueError("n_iters must be at least 1")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if self.lipschitz_grad <= 0:
            raise ValueError("lipschitz_grad must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def rho_n(self) -> float:
        return rho(self.setup.dim, self.setup.q)

    def alpha_accelerated(self, k: int) -> float:
        """Mirror stepsize alpha_{k+1} used at (0-based) iteration k."""
        n = self.setup.dim
        return self.gamma * (k + 2) / (96.0 * n * n * self.rho_n() * self.lipschitz_grad)

    def alpha_constant(self) -> float:
        """Constant mirror stepsize of the non-accelerated method."""
        n = self.setup.dim
        return self.gamma / (48.0 * n * self.rho_n() * self.lipschitz_grad)


@dataclass(frozen=True)
class AcceleratedState:
    """Snapshot passed to the per-iteration callback of ``ardfds``."""

    k: int
    x: Array
    y: Array
    z: Array


@dataclass(frozen=True)
class AveragedState:
    """Snapshot passed to the per-iteration callback of ``rdfds``."""

    k: int
    x: Array
    x_sum: Array
    count: int

    @property
    def average(self) -> Array:
        if self.count == 0:
            return self.x.copy()
        return self.x_sum / self.count


@dataclass(frozen=True)
class BaselineState:
    """Snapshot passed to the per-iteration callback of ``rspgf_baseline``."""

    k: int
    x: Array


class ConvergenceTrace:
    """Progress records: iteration, cumulative oracle calls, clean gap, wall time.

    The gap column is NaN when no metrics probe (or no known optimum) is
    available.  With ``record_every=1`` a full run has exactly N+1 records,
    including the k=0 starting point.
    """

    def __init__(self) -> None:
        self.iterations: list[int] = []
        self.oracle_calls: list[int] = []
        self.f_gaps: list[float] = []
        self.elapsed: list[float] = []

    def append(self, iteration: int, calls: int, gap: float, elapsed: float) -> None:
        self.iterations.append(iteration)
        self.oracle_calls.append(calls)
        self.f_gaps.append(gap)
        self.elapsed.append(elapsed)

    def __len__(self) -> int:
        return len(self.iterations)

    def arrays(self) -> tuple[Array, Array, Array, Array]:
        return (
            np.asarray(self.iterations, dtype=np.int64),
            np.asarray(self.oracle_calls, dtype=np.int64),
            np.asarray(self.f_gaps, dtype=float),
            np.asarray(self.elapsed, dtype=float),
        )

    @property
    def final_iteration(self) -> int:
        return self.iterations[-1]


Callback = Callable[[int, object, int], None]


def _start_run(
    problem: NoisyProblem, params: SolverParams, x0: Array
) -> tuple[Array, SphereSampler, SeedStream]:
    n = params.setup.dim
    if problem.dim != n:
        raise ValueError("problem and prox setup disagree on the dimension")
    if n < RHO_MIN_DIM:
        raise ValueError(f"solvers require n >= {RHO_MIN_DIM}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    stream = SeedStream(params.base_seed)
    sampler = SphereSampler(n, seed=stream.substream(DIRECTION_STREAM))
    return x0.copy(), sampler, stream


def _gap(metrics: Optional[CleanValueProbe], x: Array) -> float:
    if metrics is None:
        return float("nan")
    return metrics.gap(x)


def ardfds(
    problem: NoisyProblem,
    params: SolverParams,
    x0: Array,
    metrics: Optional[CleanValueProbe] = None,
    callback: Optional[Callback] = None,
    record_every: int = 1,
    stop_gap: Optional[float] = None,
    ledger: Optional[OracleLedger] = None,
    pool: Optional[Executor] = None,
) -> tuple[Array, ConvergenceTrace]:
    """Accelerated randomized derivative-free directional search.

    Per iteration k: with tau_k = 2/(k+2), evaluate the gradient surrogate at
    the coupling point x_{k+1} = tau_k z_k + (1 - tau_k) y_k, take the
    gradient-type step y_{k+1} = x_{k+1} - (1/(2 L2)) * estimate, and the
    mirror step z_{k+1} from z_k along alpha_{k+1} * n * estimate.  Returns
    (y_N, trace); the trace follows the y iterates.

    ``stop_gap`` (benchmark mode, needs a metrics probe with known optimum)
    stops the run at the first record point whose clean gap is at or below
    the threshold.  Raises SolverAbort on non-finite objective values.
    """
    x0, sampler, stream = _start_run(problem, params, x0)
    if ledger is None:
        ledger = OracleLedger()
    n = params.setup.dim
    inv_two_l = 1.0 / (2.0 * params.lipschitz_grad)
    alpha_unit = params.gamma / (96.0 * n * n * params.rho_n() * params.lipschitz_grad)
    record_every = max(1, int(record_every))

    y = x0.copy()
    z = x0.copy()
    trace = ConvergenceTrace()
    start = time.perf_counter()
    trace.append(0, ledger.calls, _gap(metrics, y), 0.0)
    if stop_gap is not None and not math.isnan(trace.f_gaps[0]) and trace.f_gaps[0] <= stop_gap:
        return y, trace

    n_iters = params.n_iters
    for k in range(n_iters):
        tau = 2.0 / (k + 2)
        x = tau * z + (1.0 - tau) * y
        g = estimate_gradient(
            problem,
            x,
            params.smoothing,
            params.batch,
            sampler,
            partial(stream.element_seed, k),
            ledger,
            pool,
        )
        gv = g.vector
        if not np.isfinite(gv).all():
            raise SolverAbort(k, trace)
        y = x - inv_two_l * gv
        z = mirror_step(params.setup, z, (alpha_unit * (k + 2) * n) * gv)
        if callback is not None:
            callback(k, AcceleratedState(k=k + 1, x=x, y=y, z=z), ledger.calls)
        done = k + 1
        if done % record_every == 0 or done == n_iters:
            gap = _gap(metrics, y)
            trace.append(done, ledger.calls, gap, time.perf_counter() - start)
            if stop_gap is not None and not math.isnan(gap) and gap <= stop_gap:
                break
    return y, trace


def rdfds(
    problem: NoisyProblem,
    params: SolverParams,
    x0: Array,
    metrics: Optional[CleanValueProbe] = None,
    callback: Optional[Callback] = None,
    record_every: int = 1,
    stop_gap: Optional[float] = None,
    ledger: Optional[OracleLedger] = None,
    pool: Optional[Executor] = None,
) -> tuple[Array, ConvergenceTrace]:
    """Non-accelerated randomized derivative-free directional search.

    Per iteration k: estimate the gradient surrogate at x_k, then take the
    mirror step x_{k+1} from x_k along alpha * n * estimate with the constant
    stepsize alpha.  Returns the running average (x_0 + ... + x_{K-1}) / K
    over the K executed iterations, plus a trace that follows the current
    iterate x_k (the callback state exposes the running average).
    """
    x0, sampler, stream = _start_run(problem, params, x0)
    if ledger is None:
        ledger = OracleLedger()
    n = params.setup.dim
    step = params.alpha_constant() * n
    record_every = max(1, int(record_every))

    x = x0.copy()
    x_sum = np.zeros_like(x)
    count = 0
    trace = ConvergenceTrace()
    start = time.perf_counter()
    trace.append(0, ledger.calls, _gap(metrics, x), 0.0)
    if stop_gap is not None and not math.isnan(trace.f_gaps[0]) and trace.f_gaps[0] <= stop_gap:
        return x.copy(), trace

    n_iters = params.n_iters
    for k in range(n_iters):
        g = estimate_gradient(
            problem,
            x,
            params.smoothing,
            params.batch,
            sampler,
            partial(stream.element_seed, k),
            ledger,
            pool,
        )
        gv = g.vector
        if not np.isfinite(gv).all():
            raise SolverAbort(k, trace)
        x_sum += x
        count += 1
        x = mirror_step(params.setup, x, step * gv)
        if callback is not None:
            # x is rebound each iteration but x_sum mutates in place; snapshot it
            callback(
                k,
                AveragedState(k=k + 1, x=x, x_sum=x_sum.copy(), count=count),
                ledger.calls,
            )
        done = k + 1
        if done % record_every == 0 or done == n_iters:
            gap = _gap(metrics, x)
            trace.append(done, ledger.calls, gap, time.perf_counter() - start)
            if stop_gap is not None and not math.isnan(gap) and gap <= stop_gap:
                break
    return x_sum / count, trace


def rspgf_baseline(
    problem: NoisyProblem,
    n_iters: int,
    batch: int,
    smoothing: float,
    x0: Array,
    step: Optional[float] = None,
    base_seed: int = 0,
    metrics: Optional[CleanValueProbe] = None,
    callback: Optional[Callback] = None,
    record_every: int = 1,
    stop_gap: Optional[float] = None,
    ledger: Optional[OracleLedger] = None,
    pool: Optional[Executor] = None,
) -> tuple[Array, ConvergenceTrace]:
    """Euclidean random-search baseline: x_{k+1} = x_k - step * estimate(x_k).

    This is a reimplementation of an external projected-gradient-free scheme
    used purely for comparison; its default stepsize 1 / (4 (n + 4) L2)
    follows that scheme's own convention and is caller-overridable.  When a
    metrics probe is available the returned point is the recorded iterate
    with the best clean value, otherwise the final iterate.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    if batch < 1:
        raise ValueError("batch must be at least 1")
    n = problem.dim
    if step is None:
        step = 1.0 / (4.0 * (n + 4) * problem.lipschitz_grad)
    if step <= 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if ledger is None:
        ledger = OracleLedger()
    stream = SeedStream(base_seed)
    sampler = SphereSampler(n, seed=stream.substream(DIRECTION_STREAM))
    record_every = max(1, int(record_every))

    x = x0.copy()
    best_x = x.copy()
    best_value = metrics.value(x) if metrics is not None else float("nan")
    trace = ConvergenceTrace()
    start = time.perf_counter()
    trace.append(0, ledger.calls, _gap(metrics, x), 0.0)
    if stop_gap is not None and not math.isnan(trace.f_gaps[0]) and trace.f_gaps[0] <= stop_gap:
        return x, trace

    for k in range(n_iters):
        g = estimate_gradient(
            problem,
            x,
            smoothing,
            batch,
            sampler,
            partial(stream.element_seed, k),
            ledger,
            pool,
        )
        gv = g.vector
        if not np.isfinite(gv).all():
            raise SolverAbort(k, trace)
        x = x - step * gv
        if callback is not None:
            callback(k, BaselineState(k=k + 1, x=x), ledger.calls)
        done = k + 1
        if done % record_every == 0 or done == n_iters:
            if metrics is not None:
                value = metrics.value(x)
                if value < best_value:
                    best_value = value
                    best_x = x.copy()
                gap = value - metrics.f_star if metrics.f_star is not None else float("nan")
            else:
                gap = float("nan")
            trace.append(done, ledger.calls, gap, time.perf_counter() - start)
            if stop_gap is not None and not math.isnan(gap) and gap <= stop_gap:
                break
    return (best_x if metrics is not None else x), trace


def plan_parameters(
    eps: float,
    L2: float,
    sigma2: float,
    theta_p: float,
    n: int,
    p: int,
    c_scale: float = 1.0,
    method: str = "ardfds",
    delta_actual: Optional[float] = None,
    gamma: float = 1.0,
    base_seed: int = 0,
) -> tuple[SolverParams, float]:
    """Order-of-magnitude (N, m, t) plan plus the tolerable noise budget delta.

    The recipes are the known sufficient choices for each method and geometry;
    they carry unspecified universal constants, so every output is multiplied
    by the single knob ``c_scale`` (default 1, not a theory value).  When the
    actual noise level is known, the smoothing parameter is floored at
    2 sqrt(delta_actual / L2), the value minimizing the noise-vs-smoothing
    error trade-off.  Returns (SolverParams, delta_budget).
    """
    if eps <= 0 or L2 <= 0 or theta_p <= 0 or c_scale <= 0:
        raise ValueError("eps, L2, theta_p and c_scale must be positive")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if method not in ("ardfds", "rdfds"):
        raise ValueError("method must be 'ardfds' or 'rdfds'")
    setup = ProxSetup(p=p, dim=n)
    if n < RHO_MIN_DIM:
        raise ValueError(f"planner requires n >= {RHO_MIN_DIM}")
    ln_n = math.log(n)

    def ceil_tol(value: float) -> int:
        # guards against 1.0 computed as 1+2e-16 jumping to the next integer
        return math.ceil(value - 1e-9 * max(1.0, abs(value)))

    if method == "ardfds":
        if p == 2:
            n_iters = ceil_tol(c_scale * math.sqrt(n * n * L2 * theta_p / eps))
            m_raw = sigma2 / eps**1.5 * math.sqrt(theta_p / L2)
            delta = min(
                eps**1.5 / (n * math.sqrt(L2 * theta_p)),
                eps**2 / (n * L2 * theta_p),
            )
            t = min(
                eps**0.75 / (n * n * L2**3 * theta_p) ** 0.25,
                eps / (L2 * math.sqrt(n * theta_p)),
            )
        else:
            n_iters = ceil_tol(c_scale * math.sqrt(n * ln_n * L2 * theta_p / eps))
            m_raw = sigma2 / eps**1.5 * math.sqrt(theta_p * ln_n / (n * L2))
            delta = min(
                eps**1.5 / math.sqrt(L2 * theta_p * n * ln_n),
                eps**2 / (n * L2 * theta_p),
            )
            t = min(
                eps**0.75 / (L2**3 * theta_p * n * ln_n) ** 0.25,
                eps / (L2 * math.sqrt(n * theta_p)),
            )
    else:
        if p == 2:
            n_iters = ceil_tol(c_scale * n * L2 * theta_p / eps)
        else:
            n_iters = ceil_tol(c_scale * ln_n * L2 * theta_p / eps)
        m_raw = sigma2 / (L2 * eps)
        delta = min(eps / n, eps**2 / (n * L2 * theta_p))
        t = min(
            math.sqrt(eps / (n * L2)),
            eps / math.sqrt(n * L2**2 * theta_p),
        )

    batch = max(1, ceil_tol(c_scale * m_raw))
    delta_budget = c_scale * delta
    smoothing = c_scale * t
    if delta_actual is not None and delta_actual > 0:
        smoothing = max(smoothing, 2.0 * math.sqrt(delta_actual / L2))
    params = SolverParams(
        n_iters=max(1, n_iters),
        batch=batch,
        smoothing=smoothing,
        lipschitz_grad=L2,
        setup=setup,
        gamma=gamma,
        base_seed=base_seed,
    )
    return params, delta_budget
