"""Nuisance learners: ridge, logistic, k-NN, random forest and a stacked
super learner, all behind :func:`fit_learner`.

Every learner maps a feature matrix to one real per row. Fitting is
deterministic given :attr:`LearnerSpec.seed`.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .._seeding import derive_seed
from ..errors import SingularSystem, TooFewSamples, ValidationError
from ..folds import make_folds
from ._forest import fit_forest, predict_forest
from ._knn import knn_mean

KINDS = ("ridge", "logistic", "knn", "random_forest", "super_learner")

DEFAULTS = {
    "ridge": {"lam": 1.0},
    "logistic": {"lam": 1.0, "max_iter": 100, "tol": 1e-8},
    "knn": {"k": 10},
    "random_forest": {"n_trees": 100, "min_leaf": 5},
    "super_learner": {"folds": 5, "step": 0.1, "iterations": 500},
}


@dataclass(frozen=True)
class LearnerSpec:
    """What to fit: learner kind, hyperparameters and seed.

    ``bases`` is only used by ``kind="super_learner"``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    bases: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")

    def resolved(self):
        """Spec with every hyperparameter filled in from the defaults."""
        return replace(self, params={**DEFAULTS[self.kind], **self.params})

    def with_seed(self, seed):
        return replace(self, seed=seed, bases=tuple(b.with_seed(derive_seed(seed, i))
                                                    for i, b in enumerate(self.bases)))

    def to_dict(self):
        out = {"kind": self.kind, "params": dict(self.resolved().params), "seed": self.seed}
        if self.bases:
            out["bases"] = [b.to_dict() for b in self.bases]
        return out


@dataclass(frozen=True)
class ClipBounds:
    lo: float = 0.01
    hi: float = 0.99

    def __post_init__(self):
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ValueError(f"need 0 <= lo < hi <= 1, got ({self.lo}, {self.hi})")


def clip_propensity(p, bounds):
    """Clip propensity predictions into ``[bounds.lo, bounds.hi]``."""
    return np.minimum(np.maximum(p, bounds.lo), bounds.hi)


def _as_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < 2:
        raise TooFewSamples(f"need at least 2 training rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values in training data")
    return X, y


class _Standardizer:
    """Column z-scoring with training statistics; constant columns map to 0."""

    def __init__(self, X):
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        self.active = sd > 0
        self.inv_scale = np.where(self.active, 1.0 / np.where(self.active, sd, 1.0), 0.0)

    def __call__(self, X):
        return np.ascontiguousarray((np.asarray(X, dtype=np.float64) - self.mean) * self.inv_scale)


class FittedPredictor:
    """Base class for fitted learners; ``predict`` maps rows to reals."""

    kind = None

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        return self._predict(X)

    __call__ = predict


class RidgePredictor(FittedPredictor):
    kind = "ridge"

    def __init__(self, scaler, coef, intercept):
        self.scaler, self.coef, self.intercept = scaler, coef, intercept

    def _predict(self, X):
        return self.scaler(X) @ self.coef + self.intercept


class LogisticPredictor(FittedPredictor):
    kind = "logistic"

    def __init__(self, scaler, coef, intercept, n_iter, converged):
        self.scaler, self.coef, self.intercept = scaler, coef, intercept
        self.n_iter, self.converged = n_iter, converged

    def _predict(self, X):
        return expit(self.scaler(X) @ self.coef + self.intercept)


class KNNPredictor(FittedPredictor):
    kind = "knn"

    def __init__(self, scaler, Z, y, k):
        self.scaler, self.Z, self.y, self.k = scaler, Z, y, k

    def _predict(self, X):
        return knn_mean(self.Z, self.y, self.scaler(X), self.k)


class ForestPredictor(FittedPredictor):
    kind = "random_forest"

    def __init__(self, arrays):
        self._arrays = arrays

    @property
    def n_trees(self):
        return self._arrays[0].shape[0]

    def _predict(self, X):
        feat, thr, left, right, value, _ = self._arrays
        return predict_forest(np.ascontiguousarray(X), feat, thr, left, right, value)


class SuperLearnerPredictor(FittedPredictor):
    kind = "super_learner"

    def __init__(self, learners, weights, oof_predictions, oof_target):
        self.learners = learners
        self.weights = weights
        self.oof_predictions = oof_predictions
        self.oof_target = oof_target

    @property
    def base_oof_mse(self):
        return np.mean((self.oof_predictions - self.oof_target[:, None]) ** 2, axis=0)

    @property
    def ensemble_oof_mse(self):
        return float(np.mean((self.oof_predictions @ self.weights - self.oof_target) ** 2))

    def _predict(self, X):
        out = np.zeros(X.shape[0])
        for w, learner in zip(self.weights, self.learners):
            if w != 0.0:
                out += w * learner.predict(X)
        return out


def _fit_ridge(X, y, lam):
    scaler = _Standardizer(X)
    Z = scaler(X)
    ybar = y.mean()
    yc = y - ybar
    p = Z.shape[1]
    if lam == 0:
        if not np.all(scaler.active) or np.linalg.matrix_rank(Z) < p:
            raise SingularSystem("rank-deficient design with lam=0")
        coef = np.linalg.lstsq(Z, yc, rcond=None)[0]
    else:
        # augmented least squares == regularized normal equations, solved by QR/SVD
        A = np.vstack([Z, math.sqrt(lam) * np.eye(p)])
        b = np.concatenate([yc, np.zeros(p)])
        coef = np.linalg.lstsq(A, b, rcond=None)[0]
    coef = np.where(scaler.active, coef, 0.0)
    return RidgePredictor(scaler, coef, ybar)


def _logistic_loss(Z1, y, beta, lam):
    eta = Z1 @ beta
    # log(1 + e^eta) - y * eta, computed without overflow
    nll = np.sum(np.logaddexp(0.0, eta) - y * eta)
    return nll + 0.5 * lam * np.dot(beta[1:], beta[1:])


def _fit_logistic(X, y, lam, max_iter, tol):
    if np.any((y < 0) | (y > 1)):
        raise ValidationError("logistic targets must lie in [0, 1]")
    scaler = _Standardizer(X)
    Z1 = np.hstack([np.ones((X.shape[0], 1)), scaler(X)])
    p = Z1.shape[1]
    penalty = np.full(p, lam)
    penalty[0] = 0.0
    beta = np.zeros(p)
    ybar = min(max(y.mean(), 1e-3), 1 - 1e-3)
    beta[0] = math.log(ybar / (1 - ybar))
    loss = _logistic_loss(Z1, y, beta, lam)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(Z1 @ beta)
        grad = Z1.T @ (mu - y) + penalty * beta
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        W = mu * (1 - mu)
        H = (Z1 * W[:, None]).T @ Z1 + np.diag(penalty)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        for _ in range(40):
            cand = beta - t * step
            cand_loss = _logistic_loss(Z1, y, cand, lam)
            if cand_loss <= loss + 1e-12 * abs(loss):
                break
            t *= 0.5
        beta, loss = cand, cand_loss
    coef = np.where(scaler.active, beta[1:], 0.0)
    return LogisticPredictor(scaler, coef, beta[0], it, converged)


def _fit_knn(X, y, k):
    scaler = _Standardizer(X)
    return KNNPredictor(scaler, scaler(X), y.copy(), int(min(k, X.shape[0])))


def _fit_forest(X, y, n_trees, min_leaf, seed):
    mtry = math.ceil(math.sqrt(X.shape[1]))
    seeds = np.random.SeedSequence(int(seed)).generate_state(int(n_trees), np.uint32)
    arrays = fit_forest(X, y, seeds.astype(np.int64), mtry, int(min_leaf))
    return ForestPredictor(arrays)


def exponentiated_gradient(P, y, step=0.1, iterations=500):
    """Convex stacking weights minimizing mean squared error of ``P @ w``.

    Starts from uniform weights. The returned weights are the best (lowest
    loss) of the final iterate and the simplex vertices, so the ensemble is
    never worse than its best single column.
    """
    n, L = P.shape
    w = np.full(L, 1.0 / L)
    for _ in range(iterations):
        grad = (2.0 / n) * (P.T @ (P @ w - y))
        w = w * np.exp(-step * (grad - grad.min()))
        w /= w.sum()
    mse_mix = np.mean((P @ w - y) ** 2)
    mse_vertex = np.mean((P - y[:, None]) ** 2, axis=0)
    j = int(np.argmin(mse_vertex))
    if mse_vertex[j] < mse_mix:
        w = np.zeros(L)
        w[j] = 1.0
    return w


def fit_super_learner(bases, X, y, folds=5, seed=0, step=0.1, iterations=500):
    """Stack ``bases`` with convex weights fitted on out-of-fold predictions."""
    X, y = _as_xy(X, y)
    if len(bases) < 2:
        raise ValueError("super learner needs at least two base learners")
    n = X.shape[0]
    if n < max(folds, 2):
        raise TooFewSamples(f"need at least {folds} rows for {folds}-fold stacking, got {n}")
    assignment = make_folds(n, folds, derive_seed(seed, 0x51))
    P = np.empty((n, len(bases)))
    for k in range(folds):
        test = assignment.indices(k)
        train = assignment.complement(k)
        for j, spec in enumerate(bases):
            P[test, j] = fit_learner(spec, X[train], y[train]).predict(X[test])
    weights = exponentiated_gradient(P, y, step=step, iterations=iterations)
    learners = [fit_learner(spec, X, y) for spec in bases]
    return SuperLearnerPredictor(learners, weights, P, y)


def fit_learner(spec, X, y):
    """Fit the learner described by ``spec`` on ``(X, y)``."""
    X, y = _as_xy(X, y)
    spec = spec.resolved()
    hp = spec.params
    if spec.kind == "ridge":
        return _fit_ridge(X, y, float(hp["lam"]))
    if spec.kind == "logistic":
        return _fit_logistic(X, y, float(hp["lam"]), int(hp["max_iter"]), float(hp["tol"]))
    if spec.kind == "knn":
        return _fit_knn(X, y, int(hp["k"]))
    if spec.kind == "random_forest":
        return _fit_forest(X, y, hp["n_trees"], hp["min_leaf"], spec.seed)
    return fit_super_learner(spec.bases, X, y, folds=int(hp["folds"]), seed=spec.seed,
                             step=float(hp["step"]), iterations=int(hp["iterations"]))


def super_learner_spec(target, seed=0, **params):
    """The three-learner stack: k-NN, random forest and a linear model.

    ``target`` is ``"propensity"`` (logistic link) or ``"score"`` (ridge).
    """
    linear = {"propensity": "logistic", "score": "ridge"}[target]
    bases = (LearnerSpec("knn"), LearnerSpec("random_forest"), LearnerSpec(linear))
    return LearnerSpec("super_learner", params, seed=seed, bases=bases).with_seed(seed)


PROFILES = ("linear", "random_forest", "super_learner")


def nuisance_profile(name, seed=0):
    """``(propensity spec, score-regression spec)`` for a named profile."""
    if name == "linear":
        return LearnerSpec("logistic", seed=seed), LearnerSpec("ridge", seed=seed)
    if name == "random_forest":
        return (LearnerSpec("random_forest", seed=derive_seed(seed, 1)),
                LearnerSpec("random_forest", seed=derive_seed(seed, 2)))
    if name == "super_learner":
        return (super_learner_spec("propensity", derive_seed(seed, 1)),
                super_learner_spec("score", derive_seed(seed, 2)))
    raise ValueError(f"unknown nuisance profile {name!r}; expected one of {PROFILES}")
