"""Counter-based random streams.

Every random draw in the package flows through `stream(seed, *tags)`, which
derives an independent Philox generator from an explicit 64-bit seed and a
tuple of integer/string tags naming the consumer. There is no global RNG
state anywhere; identical (seed, tags) always yields an identical stream on
every platform.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _fold(seed: int, tags: tuple) -> int:
    h = _splitmix64(seed & _MASK)
    for t in tags:
        if isinstance(t, str):
            for b in t.encode("utf-8"):
                h = _splitmix64(h ^ b)
        else:
            h = _splitmix64(h ^ (int(t) & _MASK))
    return h


def stream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for the sub-stream named by `tags`."""
    key = np.array([seed & _MASK, _fold(seed, tags)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
