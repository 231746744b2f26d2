"""Deterministic random-stream derivation.

Every stochastic component takes an integer seed and derives its private
streams through ``SeedSequence`` spawn keys, so a run is fully determined
by the seeds recorded in its manifest and independent streams never share
state.
"""
from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``key`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def as_generator(rng: int | np.random.Generator) -> np.random.Generator:
    """Accept either a seed or a ready generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
