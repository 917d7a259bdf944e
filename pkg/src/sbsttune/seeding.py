"""Deterministic seed derivation and the random source used by every run.

``derive_seed`` chains SplitMix64 finalizer rounds over its inputs, so results
are bit-exact on every platform and independent of Python's hash seed.
"""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, config_digest: int, subject_id: int, repetition: int) -> int:
    h = mix64(master + GOLDEN_GAMMA)
    for part in (config_digest, subject_id, repetition):
        h = mix64((h ^ (part & MASK64)) + GOLDEN_GAMMA)
    return h


def digest64(text: str) -> int:
    """Stable 64-bit digest of a string (first 8 bytes of SHA-256, little endian)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


class RandomSource(random.Random):
    """Seeded Mersenne Twister stream that can spawn independent children."""

    def __init__(self, seed: int = 0) -> None:
        self.seed_value = seed & MASK64
        super().__init__(self.seed_value)

    def spawn(self, key: int) -> RandomSource:
        return RandomSource(derive_seed(self.seed_value, 0, key & MASK64, 0))

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return int(self.random() * n)
