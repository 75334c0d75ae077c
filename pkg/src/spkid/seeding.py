"""Deterministic fan-out of one user seed to per-speaker / per-utterance seeds."""

import zlib

import numpy as np


def _key(part):
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def seed_sequence(seed, *keys):
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))


def derive_seed(seed, *keys):
    """Return a 64-bit integer seed that depends only on ``seed`` and ``keys``.

    Keys may be ints or strings; strings are hashed with CRC-32 so the
    mapping is stable across interpreter runs (unlike ``hash``).
    """
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])


def rng(seed, *keys):
    return np.random.default_rng(seed_sequence(seed, *keys))
