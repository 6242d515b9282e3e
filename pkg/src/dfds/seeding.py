"""Deterministic seed derivation for reproducible parallel runs."""

from __future__ import annotations

from dataclasses import dataclass

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags keep the direction sampler and the xi-seed streams of one run
# disjoint without coordination.
DIRECTION_STREAM = 0x64697273
PROBLEM_STREAM = 0x70726F62


def mix64(*parts: int) -> int:
    """Hash integers into a 64-bit seed (splitmix64 finalizer per part).

    Stable across platforms and Python versions, unlike builtin hash().
    """
    acc = 0x243F6A8885A308D3
    for part in parts:
        acc = (acc + (part & _MASK64) + _GOLDEN) & _MASK64
        acc ^= acc >> 30
        acc = (acc * 0xBF58476D1CE4E5B9) & _MASK64
        acc ^= acc >> 27
        acc = (acc * 0x94D049BB133111EB) & _MASK64
        acc ^= acc >> 31
    return acc


@dataclass(frozen=True)
class SeedStream:
    """Per-(iteration, batch element) xi-seeds derived from one base seed.

    Each batch element gets hash(base_seed, iteration, index), so batches can
    be evaluated by any number of workers in any order and still consume
    identical randomness.
    """

    base_seed: int

    def element_seed(self, iteration: int, index: int) -> int:
        return mix64(self.base_seed, iteration, index)

    def substream(self, tag: int) -> int:
        """Seed for an auxiliary generator (e.g. direction sampling)."""
        return mix64(self.base_seed, tag)
