"""Reproducible random streams for Monte Carlo simulation.

Streams are counter-based (Philox) and splittable: `substream(seed, h)` is
statistically independent of `substream(seed, h')` for h != h', and the
mapping is pure, so parallel consumers get bit-identical draws regardless
of scheduling. Gaussians come from Box-Muller so each draw consumes a fixed
number of uniforms (no rejection loops).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

SeedLike = "int | tuple"


def substream(seed, *path: int) -> Generator:
    """Return an independent Philox stream keyed by (seed, *path).

    `seed` may itself be a tuple, in which case it is unpacked first; this
    lets callers pass derived keys like (base_seed, step_index) through
    APIs that only forward a single seed argument.
    """
    if isinstance(seed, tuple):
        key = tuple(int(k) for k in seed) + tuple(int(p) for p in path)
    else:
        key = (int(seed),) + tuple(int(p) for p in path)
    ss = SeedSequence(entropy=key[0], spawn_key=key[1:])
    return Generator(Philox(ss))


def standard_normals(gen: Generator, n: int) -> np.ndarray:
    """Draw n standard normal variates via Box-Muller.

    Uniforms are mapped to (0, 1] so the log never sees zero.
    """
    if n <= 0:
        return np.empty(0)
    m = (n + 1) // 2
    u1 = 1.0 - gen.random(m)
    u2 = gen.random(m)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:n]


def normals(gen: Generator, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """Draw n normal variates with the given mean and standard deviation."""
    return mean + std * standard_normals(gen, n)
