"""K-fold cross-fitting of the two nuisance functions.

For every row, the abstention propensity and the observed-score regression are
predicted by models that never saw that row's fold.
"""

from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .errors import InsufficientObservedRows
from .folds import FoldAssignment, make_folds
from .nuisance import ClipBounds, clip_propensity, fit_learner

__all__ = ["FoldAssignment", "NuisanceEstimates", "crossfit_nuisances", "make_folds"]


@dataclass(frozen=True)
class NuisanceEstimates:
    """Cross-fitted per-row nuisance values.

    ``pi_hat`` is clipped to ``clip``; ``observed_per_fold[k]`` counts the
    non-abstained rows in fold ``k``.
    """

    pi_hat: np.ndarray
    mu0_hat: np.ndarray
    folds: FoldAssignment
    clip: ClipBounds = ClipBounds()
    observed_per_fold: tuple = ()
    raw_pi_range: tuple = field(default=(np.nan, np.nan))

    @property
    def n(self):
        return len(self.pi_hat)

    def diagnostics(self):
        return {
            "K": self.folds.K,
            "fold_sizes": self.folds.sizes().tolist(),
            "observed_per_fold": list(self.observed_per_fold),
            "pi_hat_min": float(self.pi_hat.min()),
            "pi_hat_max": float(self.pi_hat.max()),
            "pi_hat_mean": float(self.pi_hat.mean()),
            "raw_pi_min": float(self.raw_pi_range[0]),
            "raw_pi_max": float(self.raw_pi_range[1]),
            "clip": [self.clip.lo, self.clip.hi],
        }

    @classmethod
    def fixed(cls, pi_hat, mu0_hat, clip=None):
        """Wrap externally supplied nuisance values (no fitting).

        Propensities are clipped only when ``clip`` is given.
        """
        pi_hat = np.asarray(pi_hat, dtype=np.float64)
        mu0_hat = np.asarray(mu0_hat, dtype=np.float64)
        n = len(pi_hat)
        raw = (float(pi_hat.min()), float(pi_hat.max()))
        if clip is not None:
            pi_hat = clip_propensity(pi_hat, clip)
        else:
            clip = ClipBounds(0.0, 1.0)
        folds = FoldAssignment(K=1, fold_of=np.zeros(n, dtype=np.int64))
        return cls(pi_hat, mu0_hat, folds, clip, (), raw)


def crossfit_nuisances(ds, pi_spec, mu_spec, K=5, clip=ClipBounds(), seed=0, folds=None):
    """Fit ``pi_hat`` on ``(X, R)`` and ``mu0_hat`` on observed ``(X, S)`` out of fold.

    Parameters
    ----------
    ds : EvalDataset
    pi_spec, mu_spec : LearnerSpec
        Learners for the propensity ``P(R=1 | X)`` and the score regression
        ``E[S | R=0, X]``. Per-fold seeds are derived from ``seed``.
    K : int
        Number of folds (ignored when ``folds`` is given).
    clip : ClipBounds
        Bounds applied to the propensity predictions.
    folds : FoldAssignment, optional
        Reuse an existing partition, e.g. to cross-fit two classifiers on the
        same split.

    Raises
    ------
    InsufficientObservedRows
        If a training complement has fewer than two non-abstained rows.
    """
    n = ds.n
    if folds is None:
        folds = make_folds(n, K, seed)
    X = ds.x
    r = ds.r.astype(np.float64)
    s = ds.scores_or_zero()
    observed = ds.observed
    pi_raw = np.empty(n)
    mu0 = np.empty(n)
    for k in range(folds.K):
        test = folds.indices(k)
        train = folds.complement(k)
        train_obs = train[observed[train]]
        if len(train_obs) < 2:
            raise InsufficientObservedRows(
                f"fold {k}: training complement has {len(train_obs)} non-abstained rows, need 2")
        fold_seed = derive_seed(seed, k)
        pi_model = fit_learner(pi_spec.with_seed(derive_seed(fold_seed, 1)), X[train], r[train])
        mu_model = fit_learner(mu_spec.with_seed(derive_seed(fold_seed, 2)), X[train_obs], s[train_obs])
        pi_raw[test] = pi_model.predict(X[test])
        mu0[test] = mu_model.predict(X[test])
    counts = tuple(int(observed[folds.indices(k)].sum()) for k in range(folds.K))
    pi_hat = clip_propensity(pi_raw, clip)
    assert np.all((pi_hat >= clip.lo) & (pi_hat <= clip.hi))
    pi_hat.flags.writeable = False
    mu0.flags.writeable = False
    return NuisanceEstimates(pi_hat, mu0, folds, clip, counts,
                             (float(pi_raw.min()), float(pi_raw.max())))
