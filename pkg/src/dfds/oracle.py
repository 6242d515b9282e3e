"""Noisy two-point zeroth-order oracle with exact call accounting.

The oracle returns a pair of objective values that share one stochastic
realization.  Solvers see only this surface: the exact objective is kept on a
separate metrics-only probe so nothing in the optimization path can touch it.
"""

from __future__ import annotations

import inspect
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


@dataclass(frozen=True)
class CleanValueProbe:
    """Metrics-only access to the exact objective value.

    Handed to benchmark and reporting code, never to the solver update rules.
    ``f_star`` is the known optimal value when available (benchmark problems).
    """

    value: Callable[[Array], float]
    f_star: Optional[float] = None

    def gap(self, x: Array) -> float:
        """f(x) - f*; NaN when the optimal value is unknown."""
        if self.f_star is None:
            return float("nan")
        return float(self.value(x)) - self.f_star


class OracleLedger:
    """Counter of two-point oracle invocations.

    One invocation = one (x, y) pair evaluated under a shared realization.
    Increments are serialized so batched evaluations may run on a worker pool.
    """

    __slots__ = ("_calls", "_lock")

    def __init__(self) -> None:
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def record(self, pairs: int = 1) -> None:
        if pairs < 0:
            raise ValueError("pair count must be non-negative")
        with self._lock:
            self._calls += pairs


def oracle_call_count(ledger: OracleLedger) -> int:
    return ledger.calls


def _zero_noise(x: Array, xi_seed: int) -> float:
    return 0.0


def _normalize_noise(fn: Optional[Callable]) -> Callable[[Array, int], float]:
    """Accept eta(x) or eta(x, xi_seed); store the seed-aware form."""
    if fn is None:
        return _zero_noise
    try:
        n_params = len(inspect.signature(fn).parameters)
    except (TypeError, ValueError):
        n_params = 1
    if n_params >= 2:
        return fn
    return lambda x, xi_seed: fn(x)


@dataclass
class NoisyProblem:
    """Black-box objective with a stochastic part and bounded additive noise.

    ``value_stochastic(x, xi_seed)`` must be deterministic in its inputs: the
    seed stands for the realization, which is how a pair evaluation shares one
    realization by construction.  ``adversarial_noise`` is bounded by
    ``delta_noise`` in absolute value; it may ignore or use the seed.
    """

    dim: int
    value_stochastic: Callable[[Array, int], float]
    lipschitz_grad: float
    sigma2: float = 0.0
    delta_noise: float = 0.0
    adversarial_noise: Optional[Callable] = None
    value_clean: Optional[Callable[[Array], float]] = None
    _noise: Callable[[Array, int], float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.lipschitz_grad <= 0:
            raise ValueError("lipschitz_grad must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        if self.delta_noise < 0:
            raise ValueError("delta_noise must be non-negative")
        self._noise = _normalize_noise(self.adversarial_noise)
        # Keep the exact objective off the public oracle surface.
        self._clean = self.value_clean
        self.value_clean = None

    def metrics_probe(self, f_star: Optional[float] = None) -> CleanValueProbe:
        """Clean-objective probe for benchmark and metric code only."""
        if self._clean is None:
            raise ValueError("problem was built without a clean objective")
        return CleanValueProbe(value=self._clean, f_star=f_star)

    @property
    def has_clean_value(self) -> bool:
        return self._clean is not None


def evaluate_pair(
    problem: NoisyProblem,
    x: Array,
    y: Array,
    xi_seed: int,
    ledger: OracleLedger,
) -> tuple[float, float]:
    """One two-point oracle call: noisy values at x and y under a shared seed.

    Returns (F(x, xi) + eta(x), F(y, xi) + eta(y)) and increments the ledger
    by exactly one.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (problem.dim,) or y.shape != (problem.dim,):
        raise ValueError(
            f"point dimension mismatch: expected ({problem.dim},), "
            f"got {x.shape} and {y.shape}"
        )
    vx = problem.value_stochastic(x, xi_seed) + problem._noise(x, xi_seed)
    vy = problem.value_stochastic(y, xi_seed) + problem._noise(y, xi_seed)
    ledger.record(1)
    return float(vx), float(vy)
