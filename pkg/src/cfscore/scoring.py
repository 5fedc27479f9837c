"""Positively oriented scoring rules for probabilistic predictions.

Class labels are 1-based: ``y`` ranges over ``1..C`` for a ``C``-class
probability vector.
"""

import numpy as np

from .errors import InvalidProbabilities, LabelOutOfRange

SCORE_RULES = ("accuracy", "brier")
PROB_TOL = 1e-9


def _check(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    single = probs.ndim == 1
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(labels)
    if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > PROB_TOL):
        raise InvalidProbabilities("probabilities must be non-negative and sum to 1")
    C = probs.shape[1]
    if labels.shape[0] != probs.shape[0]:
        raise ValueError("one label per probability vector is required")
    if np.any(labels != np.floor(labels)) or np.any((labels < 1) | (labels > C)):
        raise LabelOutOfRange(f"labels must be integers in 1..{C}")
    return probs, labels.astype(np.int64), single


def accuracy_score(p, y):
    """1 if the most probable class (lowest index on ties) is ``y``, else 0."""
    probs, labels, single = _check(p, y)
    # argmax returns the first maximum, i.e. the lowest class index
    out = (np.argmax(probs, axis=1) + 1 == labels).astype(np.float64)
    return float(out[0]) if single else out


def brier_score(p, y):
    """``1 - sum_c (p_c - 1{y = c})**2``, in ``[-1, 1]``."""
    probs, labels, single = _check(p, y)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels - 1] = 1.0
    out = 1.0 - np.sum((probs - onehot) ** 2, axis=1)
    return float(out[0]) if single else out


def score(rule, p, y):
    if rule == "accuracy":
        return accuracy_score(p, y)
    if rule == "brier":
        return brier_score(p, y)
    raise ValueError(f"unknown scoring rule {rule!r}; expected one of {SCORE_RULES}")


def binary_probs(p1):
    """Stack ``P(class 2)`` into ``(n, 2)`` probability rows."""
    p1 = np.asarray(p1, dtype=np.float64)
    return np.column_stack([1.0 - p1, p1])
