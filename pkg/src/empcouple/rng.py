"""Reproducible, independent RNG streams.

A stream is a (seed, stream_id) pair feeding a counter-based Philox
generator, so distinct pairs are statistically independent and the same pair
reproduces identical draws regardless of scheduling.  Derived ids are stable
blake2b hashes of integer/string tags, never Python's randomized ``hash``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def mix_to_id(*parts) -> int:
    """Stable 64-bit id from integer and string tags."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, str):
            h.update(b"s")
            h.update(part.encode("utf-8"))
        else:
            h.update(b"i")
            h.update(struct.pack("<Q", int(part) & _MASK64))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.seed & _MASK64, self.stream_id & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *tags) -> "RngStream":
        """Independent sub-stream keyed by this stream's id plus tags."""
        return RngStream(self.seed, mix_to_id(self.stream_id, *tags))


def derive_stream(seed: int, n: int, rep: int, role: str) -> RngStream:
    """Per-replicate stream used by the Monte Carlo harness.

    The id depends only on (n, rep, role), so replicate work can be scheduled
    in any order on any number of workers without changing the draws.
    """
    return RngStream(seed, mix_to_id(n, rep, role))
