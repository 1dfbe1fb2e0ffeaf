"""Counter-based deterministic random streams.

Every random draw in the package comes from a Philox generator keyed by
``(seed, *stream)``, so a sampled value is attributable to its seed, its
stream id and its position in that stream.  Trials that own distinct
stream ids can run in any order and produce the same values.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "stream_key"]


def _word(part: int | str) -> int:
    if isinstance(part, int):
        if part < 0:
            raise ValueError("stream ids must be nonnegative")
        return part
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream_key(seed: int, *ids: int | str) -> tuple[int, ...]:
    """Canonical integer key for a named stream."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return (seed, *(_word(i) for i in ids))


def stream(seed: int, *ids: int | str) -> np.random.Generator:
    """Return an independent Philox stream for ``(seed, *ids)``.

    String ids are hashed, integer ids are used verbatim, so
    ``stream(42, "encrypt", 7)`` is the 8th trial of the encryption stream.
    """
    key = stream_key(seed, *ids)
    ss = np.random.SeedSequence(key[0], spawn_key=key[1:])
    return np.random.Generator(np.random.Philox(ss))
