"""Named, counter-based random streams.

Every random draw in the package comes from ``path_rng(seed, name, i)``:
a Philox generator whose key is derived from the user seed and a stream
name, and whose counter starts at the path index. Path ``i`` therefore sees
the same numbers whatever order (or worker) generates it.
"""

from __future__ import annotations

import zlib

import numpy as np

from .exceptions import PathSpaceError

__all__ = ["check_seed", "stream_key", "path_rng", "child_seed"]

_MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise PathSpaceError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise PathSpaceError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def stream_key(seed, name) -> np.ndarray:
    """Two 64-bit Philox key words for the stream ``name`` under ``seed``."""
    ss = np.random.SeedSequence([check_seed(seed), zlib.crc32(name.encode("utf-8"))])
    return ss.generate_state(2, dtype=np.uint64)


def path_rng(seed, name, i, key=None) -> np.random.Generator:
    """Generator for item ``i`` of stream ``name``.

    Pass a precomputed ``key`` from :func:`stream_key` in tight loops.
    """
    key = stream_key(seed, name) if key is None else key
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, int(i)]))


def child_seed(seed, name) -> int:
    """A derived 64-bit seed, for handing to a sub-computation."""
    return int(stream_key(seed, "seed:" + name)[0])
