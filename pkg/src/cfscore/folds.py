from dataclasses import dataclass

import numpy as np

from ._seeding import rng_for
from .errors import BadFoldCount


@dataclass(frozen=True)
class FoldAssignment:
    """Balanced partition of ``range(n)`` into ``K`` folds."""

    K: int
    fold_of: np.ndarray

    @property
    def n(self):
        return len(self.fold_of)

    def indices(self, k):
        return np.flatnonzero(self.fold_of == k)

    def complement(self, k):
        return np.flatnonzero(self.fold_of != k)

    def sizes(self):
        return np.bincount(self.fold_of, minlength=self.K)


def make_folds(n, K, seed):
    """Uniformly random balanced fold assignment, deterministic in ``seed``.

    Fold sizes differ by at most one.
    """
    if K < 2 or K > n:
        raise BadFoldCount(f"need 2 <= K <= n, got K={K}, n={n}")
    perm = rng_for(seed, 0xF01D).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % K
    fold_of.flags.writeable = False
    return FoldAssignment(K=int(K), fold_of=fold_of)
