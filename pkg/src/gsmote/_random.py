"""Seeding helpers.

Every stochastic routine in the package takes a ``random_state`` that may be
``None``, an integer seed, a :class:`numpy.random.SeedSequence` or a
:class:`numpy.random.Generator`. Parallel work draws from substreams keyed by
a master seed plus a task key, so results never depend on scheduling.
"""

from __future__ import annotations

import numpy as np

_SEED_BOUND = 2**63


def as_generator(random_state=None) -> np.random.Generator:
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, np.random.RandomState):
        return np.random.default_rng(random_state.randint(0, 2**31))
    return np.random.default_rng(random_state)


def derive_seed(random_state=None) -> int:
    """Collapse ``random_state`` to a single integer master seed.

    Integers pass through unchanged; generators are advanced by one draw.
    """
    if isinstance(random_state, (int, np.integer)) and not isinstance(random_state, bool):
        return int(random_state)
    return int(as_generator(random_state).integers(0, _SEED_BOUND))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for task ``key`` under master ``seed``."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    )
