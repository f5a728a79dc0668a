"""Seeded, counter-based random streams.

Every stochastic routine takes an integer seed and builds its generator
through :func:`make_rng`, so results are reproducible across platforms.
Per-trial streams come from :func:`derive_seed`.
"""
from __future__ import annotations

import numpy as np

RNG_NAME = "philox4x64-v1"
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer on a 64-bit integer."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed for the ``index``-th independent sub-stream of ``seed``."""
    return splitmix64(splitmix64(int(seed) & _MASK64) ^ (int(index) & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    """Philox (4x64) generator keyed directly by the 64-bit seed."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    key = splitmix64(int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
