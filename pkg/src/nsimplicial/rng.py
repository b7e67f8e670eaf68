"""Seeded random streams.

Every stream is a numpy ``Philox`` (counter-based, 4x64, 10 rounds) bit
generator keyed by a ``SeedSequence`` built from the experiment seed and a
tuple of stream ids. Philox output is specified independently of platform,
so a given ``(seed, *stream)`` reproduces the same numbers everywhere. OS
entropy is never consulted.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0 or any(s < 0 for s in stream):
        raise ValueError("seed and stream ids must be nonnegative")
    ss = np.random.SeedSequence([int(seed), *(int(s) for s in stream)])
    return np.random.Generator(np.random.Philox(ss))
