from hashlib import blake2b

import numpy as np

MASK64 = (1 << 64) - 1


def hash64(text: str) -> int:
    return int.from_bytes(blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def derive_seed(seed: int, stream: str) -> int:
    """Seed of a named stream; streams are independent of the order modules ask for them."""
    return hash64(f"{seed}:{stream}")


def stream_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, stream))


def splitmix64(state: int):
    """Endless SplitMix64 output stream starting from ``state``."""
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)
