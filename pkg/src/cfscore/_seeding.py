"""Deterministic seed derivation.

Child seeds are obtained by hashing ``(seed, *keys)`` through numpy's
``SeedSequence``; streams for different keys are statistically independent
and do not shift when unrelated keys change.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed, *keys):
    """Return a 64-bit child seed for ``(seed, *keys)``."""
    entropy = [int(seed) & MASK64] + [int(k) & MASK64 for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def rng_for(seed, *keys):
    return np.random.default_rng(derive_seed(seed, *keys))
