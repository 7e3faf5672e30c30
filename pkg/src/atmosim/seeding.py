"""Seed derivation.

All randomness descends from one integer root seed. A component draws its
generator from ``np.random.SeedSequence(root, spawn_key=(STREAM, *index))``
where ``STREAM`` identifies the component and ``index`` the work item
(attenuation level, shard, ...). Streams never depend on the number of
worker threads, so results are reproducible for any ``--threads`` value.
"""

import hashlib

import numpy as np

STREAM_SAMPLE = 1  # multinomial counts of ensemble level j: (j,)
STREAM_BOOTSTRAP = 2  # bootstrap shard s of a PDT: (*pdt_digest_words, s)
STREAM_MONTE_CARLO = 3  # photon-level Monte Carlo shard s: (s,)
STREAM_EMPIRICAL = 4


def derive_rng(seed, stream, *index):
    """Return a ``numpy.random.Generator`` for one component/work item."""
    if seed is None:
        raise ValueError("a seed is required for sampling")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), *map(int, index)))
    return np.random.default_rng(ss)


def digest_words(*arrays, n_words=4):
    """Hash numeric arrays into a few 32-bit words usable as a spawn key."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    d = h.digest()
    return tuple(int.from_bytes(d[4 * i:4 * i + 4], "little") for i in range(n_words))
