"""Deterministic RNG stream derivation.

All randomness in the package flows from a single master seed.  Substreams
are addressed by an integer path, e.g. ``stream(seed, FAMILY_SAMPLE, theta_index,
replication_index)``, and are backed by the counter-based Philox generator so
that streams are independent by construction.  The same path always yields the
same stream, regardless of process or thread layout.
"""

from __future__ import annotations

import numpy as np

# Fixed role tags so independent subsystems never collide on a path prefix.
SAMPLE = 11
EXCESS = 23
BETTI = 37
CHECK = 53
REGIME = 71


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Derive the generator for ``(master_seed, *path)``.

    The path is folded into a Philox key via ``SeedSequence``; distinct paths
    give statistically independent streams and identical paths give identical
    streams.
    """
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    key = ss.generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
