"""
Named, independent random streams derived from one experiment seed.
"""

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def stream_key(*names: object) -> list[int]:
    """Four 32-bit words from the sha256 digest of the stream path."""
    digest = hashlib.sha256("/".join(str(n) for n in names).encode()).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(seed: int, *names: object) -> np.random.Generator:
    """
    Build the generator for one named stream.

    The same (seed, names) always yields the same stream, and streams with
    different names do not share state.
    """
    entropy = [seed & SEED_MASK, *stream_key(*names)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
