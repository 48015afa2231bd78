"""Counter-based random streams.

All randomness is derived from ``(master_seed, stream, *counters)`` through
``numpy.random.SeedSequence`` spawn keys, so results never depend on the
order in which work is scheduled.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Named random streams."""

    INIT = 1
    SELECTION = 2
    VARIATION = 3
    EVALUATION = 4
    ENV_CREATION = 5
    CREATION_EVAL = 6
    TRANSFER_EVAL = 7
    SUITE = 8
    SUITE_EVAL = 9
    EPISODE = 10
    GENERATION = 11


def _sequence(master_seed: int, stream: Stream, counters: tuple[int, ...]) -> np.random.SeedSequence:
    key = (int(stream), *(int(c) for c in counters))
    return np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)


def derive_seed(master_seed: int, stream: Stream, *counters: int) -> int:
    """Derive a 63-bit seed for ``(stream, *counters)``."""
    state = _sequence(master_seed, stream, counters).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def stream(master_seed: int, name: Stream, *counters: int) -> np.random.Generator:
    """Return an independent generator for ``(name, *counters)``."""
    return np.random.Generator(np.random.PCG64(_sequence(master_seed, name, counters)))
