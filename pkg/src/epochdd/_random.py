"""Seeded random number generation.

Every stochastic routine takes a 64-bit integer seed and builds a Philox
(counter-based) generator from it.  Replicates get independent child seeds
derived through :class:`numpy.random.SeedSequence`, so a master seed fixes the
whole experiment regardless of the order in which replicates run.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed):
    """Philox-backed generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(check_seed(seed)))


def derive_seeds(seed, count):
    """``count`` child seeds (unsigned 64-bit ints) of ``seed``."""
    children = np.random.SeedSequence(check_seed(seed)).spawn(count)
    out = []
    for child in children:
        lo, hi = child.generate_state(2, dtype=np.uint32)
        out.append(int(lo) | (int(hi) << 32))
    return out
