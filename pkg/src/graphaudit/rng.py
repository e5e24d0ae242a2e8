"""Seeded randomness.

Every random draw in the package goes through :func:`make_rng`, a NumPy
``Generator`` over PCG64 seeded with an unsigned 64-bit integer. Per-item
seeds come from :func:`derive_seed` so dataset-level work does not depend on
processing order.
"""

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def derive_seed(base: int, index: int) -> int:
    """``base XOR (index * GOLDEN_GAMMA) mod 2**64``.

    The multiplier is odd, so distinct indices give distinct seeds for a fixed base.
    """
    return (int(base) & MASK64) ^ ((int(index) * GOLDEN_GAMMA) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
