"""Stable random-stream derivation.

Every consumer of randomness derives its own child stream from
``(seed, tag, *indices)`` so that adding or toggling one source of randomness
never shifts the draws of another.
"""
from __future__ import annotations

import hashlib
import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def child_rng(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Independent generator keyed by a base seed, a purpose tag and indices."""
    ss = np.random.SeedSequence(
        entropy=int(seed) & _MASK64,
        spawn_key=(_tag_key(tag),) + tuple(int(i) for i in indices),
    )
    return np.random.default_rng(ss)


def stable_hash64(*parts: object) -> int:
    """64-bit hash of the ``repr`` of ``parts``; identical across processes."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def array_digest(a: np.ndarray) -> str:
    a = np.ascontiguousarray(a)
    h = hashlib.blake2b(digest_size=16)
    h.update(str(a.dtype).encode())
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()
