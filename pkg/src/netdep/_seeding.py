"""Deterministic seed splitting.

Child streams are keyed by ``numpy.random.SeedSequence(base, spawn_key=keys)``.
String keys are mapped to integers with CRC32 so the derivation is stable
across processes and interpreter runs (``hash()`` is salted).
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"seed key parts must be nonnegative, got {part}")
    return int(part)


def derive_seed(base_seed: int, *parts: int | str) -> np.random.SeedSequence:
    """Return the child seed sequence for ``(base_seed, *parts)``.

    Distinct key tuples give statistically independent streams; the same
    tuple always gives the same stream.
    """
    if base_seed < 0:
        raise ValueError(f"base seed must be nonnegative, got {base_seed}")
    return np.random.SeedSequence(int(base_seed), spawn_key=tuple(_key(p) for p in parts))
