"""Deterministic random-stream derivation.

All randomness flows from one root seed.  Child streams are derived from
the root plus purpose tags (strings or ints), so adding workers or
reordering independent stages never changes results.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    return zlib.crc32(str(tag).encode("utf-8"))


def child_rng(seed: int, *tags) -> np.random.Generator:
    """Random stream derived from (root seed, purpose tags)."""
    entropy = [int(seed)] + [_tag_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
