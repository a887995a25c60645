"""Seeded random streams.

One master seed; every consumer derives its own stream from
``(seed, purpose, *indices)`` so results do not depend on the order in
which clients, anchors or rounds are processed.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    SIZES = 0
    CENTERS = 1
    LABELS = 2
    CLIENT = 3
    ANCHORS = 4
    FRESH = 5
    ORTHO = 6
    POWER = 7


def stream(seed: int, purpose: Stream, *indices: int) -> np.random.Generator:
    """Return the generator for ``purpose`` at ``indices`` under ``seed``."""
    key = (int(purpose),) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def seed_sequence(seed: int, purpose: Stream, *indices: int) -> np.random.SeedSequence:
    """SeedSequence form of :func:`stream`, for APIs that take a seed."""
    key = (int(purpose),) + tuple(int(i) for i in indices)
    return np.random.SeedSequence(entropy=int(seed), spawn_key=key)
