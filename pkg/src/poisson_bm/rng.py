"""Counter-based random stream derivation for reproducible parallel runs.

Each (master seed, epsilon index, replication index) tuple is packed
injectively into a 128-bit Philox key, so distinct tuples get distinct
keys and therefore independent counter-based streams with no shared
prefix. Streams depend only on the tuple, never on scheduling, which is
what makes worker-count-independent reports possible.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1


def derive_stream(
    master_seed: int, epsilon_index: int, replication_index: int
) -> np.random.Generator:
    """Generator for one replication, keyed by the identifying tuple.

    master_seed is a 64-bit unsigned integer; the two indices must fit
    in 32 bits. The key layout is (seed << 64) | (eps << 32) | rep,
    an injection into the 128-bit Philox key space.
    """
    if not 0 <= master_seed <= _MASK64:
        raise ValueError(f"master_seed must fit in 64 bits, got {master_seed}")
    if not 0 <= epsilon_index <= _MASK32:
        raise ValueError(f"epsilon_index must fit in 32 bits, got {epsilon_index}")
    if not 0 <= replication_index <= _MASK32:
        raise ValueError(f"replication_index must fit in 32 bits, got {replication_index}")
    key = (master_seed << 64) | (epsilon_index << 32) | replication_index
    return np.random.Generator(np.random.Philox(key=key))
