"""Deterministic named random streams.

All randomness in the package flows from a single non-negative integer seed.
Components derive their own generator from ``(seed, *tags)`` where tags are
short strings or small integers, so one top-level seed reproduces an entire
run bit-for-bit while independent components never share a stream.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import ConfigError


def _entropy(seed: int, tags: tuple) -> tuple[int, ...]:
    seed = int(seed)
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    parts = [seed]
    for tag in tags:
        if isinstance(tag, str):
            parts.append(zlib.crc32(tag.encode("utf-8")))
        else:
            value = int(tag)
            if value < 0:
                raise ConfigError(f"stream tag must be non-negative, got {value}")
            parts.append(value)
    return tuple(parts)


def substream(seed: int, *tags) -> np.random.Generator:
    """Generator for the stream named by ``(seed, *tags)``."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, tags)))


def derive_seed(seed: int, *tags) -> int:
    """Collapse ``(seed, *tags)`` into a plain integer seed.

    For APIs that accept a single integer seed rather than a generator.
    """
    ss = np.random.SeedSequence(_entropy(seed, tags))
    return int(ss.generate_state(1, np.uint64)[0])
