"""Deterministic random-stream derivation.

Consumers never share a sequential generator. Each one owns a
:class:`StreamKey` -- a (master_seed, path) address -- and the bits it
sees are a pure function of that address: SHA-256 of the address keys a
counter-based Philox generator. Two runs with the same key produce the
same stream on any platform and under any worker layout, and distinct
paths give statistically independent streams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class StreamKey:
    """Address of one independent random stream under a master seed."""

    master_seed: int
    path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= _U64_MAX:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        for element in self.path:
            label, index = element
            if not isinstance(label, str) or not label:
                raise ValueError(f"path labels must be non-empty strings, got {label!r}")
            if not isinstance(index, int) or not 0 <= index <= _U64_MAX:
                raise ValueError(f"path indices must be 64-bit unsigned integers, got {index!r}")

    def child(self, label: str, index: int = 0) -> "StreamKey":
        """Derive the sub-stream named (label, index)."""
        return StreamKey(self.master_seed, self.path + ((label, index),))

    def _digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(self.master_seed.to_bytes(8, "little"))
        for label, index in self.path:
            raw = label.encode("utf-8")
            h.update(len(raw).to_bytes(2, "little"))
            h.update(raw)
            h.update(index.to_bytes(8, "little"))
        return h.digest()

    def philox_key(self) -> np.ndarray:
        """Two uint64 words keying the Philox counter stream."""
        return np.frombuffer(self._digest()[:16], dtype=np.uint64).copy()

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this key's stream."""
        return np.random.Generator(np.random.Philox(key=self.philox_key()))
