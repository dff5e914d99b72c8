"""Seeded random streams.

Every stream is numpy's PCG64 fed by a ``SeedSequence``. PCG64 advances its
128-bit state by one LCG step per 64-bit output and ``Generator.random``
consumes exactly one output per double, so a request for ``n`` doubles (in
one call or many) always advances the stream by ``n`` steps. Output is
identical across platforms for a given seed.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20031


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def chain_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for independent replicate ``index`` under master ``seed``.

    Same as ``SeedSequence(seed).spawn(n)[index]`` for any ``n > index``.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,)))
    )
