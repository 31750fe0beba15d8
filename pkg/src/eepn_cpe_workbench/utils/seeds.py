"""Seed derivation for reproducible trials under any execution schedule."""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Stream indices within one trial.
BITS_STREAM = 0
TX_PN_STREAM = 1
LO_PN_STREAM = 2
AWGN_STREAM = 3


def mix64(value: int) -> int:
    """splitmix64 finaliser: a bijective avalanche mix of a 64-bit integer."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of the index-th child of base_seed.

    Children of one base are pairwise distinct because mix64 is a bijection.
    """
    return mix64(base_seed + (index + 1) * GOLDEN_GAMMA)


def make_generator(seed: int) -> np.random.Generator:
    """Counter-based generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(seed & MASK64))
