"""Evaluation logs of abstaining classifiers.

A log row holds the input features ``x``, the abstention flag ``r`` (1 means
the classifier abstained) and the score ``s``, which is present exactly when
``r == 0``. Datasets store scores in a masked array so a missing score can
never take part in arithmetic by accident.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    MissingScoreOnPrediction,
    PresentScoreOnAbstention,
    ScoreRangeViolation,
    ValidationError,
)

ACCURACY_RANGE = (0.0, 1.0)
BRIER_RANGE = (-1.0, 1.0)


@dataclass(frozen=True)
class EvalRecord:
    x: tuple
    r: int
    s: Optional[float] = None

    def __post_init__(self):
        if self.r not in (0, 1):
            raise ValidationError(f"r must be 0 or 1, got {self.r!r}")
        if self.r == 1 and self.s is not None:
            raise PresentScoreOnAbstention("score present on an abstained record")
        if self.r == 0 and self.s is None:
            raise MissingScoreOnPrediction("score missing on a non-abstained record")


def _freeze(a):
    a.flags.writeable = False
    return a


def _check_arm(r, s, score_range, label=""):
    """Validate one (r, s) column pair; ``s`` uses NaN for an absent score."""
    if not np.all((r == 0) | (r == 1)):
        bad = int(np.flatnonzero((r != 0) & (r != 1))[0])
        raise ValidationError(f"row {bad}{label}: r must be 0 or 1")
    absent = np.isnan(s)
    clash = (r == 1) & ~absent
    if clash.any():
        raise PresentScoreOnAbstention(f"row {int(np.flatnonzero(clash)[0])}{label}: "
                                       "score present on an abstained row")
    hole = (r == 0) & absent
    if hole.any():
        raise MissingScoreOnPrediction(f"row {int(np.flatnonzero(hole)[0])}{label}: "
                                       "score missing on a non-abstained row")
    lo, hi = score_range
    outside = ~absent & ((s < lo) | (s > hi) | ~np.isfinite(np.where(absent, 0.0, s)))
    if outside.any():
        i = int(np.flatnonzero(outside)[0])
        raise ScoreRangeViolation(f"row {i}{label}: score {s[i]!r} outside [{lo}, {hi}]")


def _as_features(x):
    x = np.array(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionMismatch(f"features must be an (n, d) array with d >= 1, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptyDataset("dataset has no rows")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite feature values")
    return x


def _as_scores(s, n):
    if np.ma.isMaskedArray(s):
        s = np.ma.filled(s.astype(np.float64), np.nan)
    elif isinstance(s, np.ndarray) and s.dtype != object:
        s = s.astype(np.float64)
    else:
        s = np.array([np.nan if v is None else v for v in s], dtype=np.float64)
    if s.shape != (n,):
        raise DimensionMismatch(f"expected {n} scores, got shape {s.shape}")
    return s


class EvalDataset:
    """Validated evaluation log for one abstaining classifier.

    Build it with :func:`validate_dataset` (row records) or
    :meth:`EvalDataset.from_arrays`. ``x`` is ``(n, d)``, ``r`` is an ``int8``
    vector and ``s`` a masked array that is masked exactly where ``r == 1``.
    """

    def __init__(self, x, r, s, score_range=ACCURACY_RANGE):
        self.x = _freeze(x)
        self.r = _freeze(r)
        self.s = s
        self.score_range = tuple(float(v) for v in score_range)

    @classmethod
    def from_arrays(cls, x, r, s, score_range=ACCURACY_RANGE):
        """Validate column arrays; absent scores are NaN, ``None`` or masked."""
        x = _as_features(x)
        n = x.shape[0]
        r = np.asarray(r)
        if r.shape != (n,):
            raise DimensionMismatch(f"expected {n} abstention flags, got shape {r.shape}")
        s = _as_scores(s, n)
        _check_arm(r, s, score_range)
        r = r.astype(np.int8)
        data = np.where(r == 1, 0.0, s)
        masked = np.ma.MaskedArray(_freeze(data), mask=_freeze(r == 1))
        return cls(x, r, masked, score_range)

    def __len__(self):
        return self.x.shape[0]

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    @property
    def observed(self):
        """Boolean mask of rows with a revealed score."""
        return self.r == 0

    def scores_or_zero(self):
        """Scores with abstained entries replaced by 0, for ``(1 - r) * s`` sums."""
        return np.ma.filled(self.s, 0.0)

    def records(self):
        for i in range(self.n):
            s = None if self.r[i] == 1 else float(self.s.data[i])
            yield EvalRecord(tuple(self.x[i].tolist()), int(self.r[i]), s)

    def subset(self, idx):
        idx = np.asarray(idx)
        return EvalDataset.from_arrays(self.x[idx], self.r[idx],
                                       np.ma.filled(self.s[idx], np.nan), self.score_range)

    def head(self, n):
        return self.subset(np.arange(min(n, self.n)))

    def __repr__(self):
        return f"EvalDataset(n={self.n}, d={self.d}, abstentions={int(self.r.sum())})"


def validate_dataset(rows: Sequence, score_range=ACCURACY_RANGE) -> EvalDataset:
    """Build an :class:`EvalDataset` from ``(features, r, s_or_None)`` rows.

    The feature dimension is taken from the first row.

    Raises
    ------
    EmptyDataset, PresentScoreOnAbstention, MissingScoreOnPrediction,
    DimensionMismatch, ScoreRangeViolation
    """
    rows = list(rows)
    if not rows:
        raise EmptyDataset("dataset has no rows")
    d = len(np.atleast_1d(rows[0][0]))
    if d < 1:
        raise DimensionMismatch("feature vectors must have at least one entry")
    xs, rs, ss = [], [], []
    for i, row in enumerate(rows):
        feats, r, s = row
        feats = np.atleast_1d(np.asarray(feats, dtype=np.float64))
        if feats.shape != (d,):
            raise DimensionMismatch(f"row {i}: expected {d} features, got {feats.shape[0]}")
        if r == 1 and s is not None:
            raise PresentScoreOnAbstention(f"row {i}: score present on an abstained row")
        if r == 0 and s is None:
            raise MissingScoreOnPrediction(f"row {i}: score missing on a non-abstained row")
        xs.append(feats)
        rs.append(r)
        ss.append(np.nan if s is None else float(s))
    return EvalDataset.from_arrays(np.vstack(xs), np.asarray(rs), np.asarray(ss), score_range)


class PairedDataset:
    """Logs of two abstaining classifiers A and B on the same inputs."""

    def __init__(self, a: EvalDataset, b: EvalDataset):
        if a.n != b.n or not np.array_equal(a.x, b.x):
            raise DimensionMismatch("arms must share the same feature rows")
        self.a = a
        self.b = b

    @classmethod
    def from_arrays(cls, x, r_a, s_a, r_b, s_b, score_range=ACCURACY_RANGE):
        x = _as_features(x)
        try:
            a = EvalDataset.from_arrays(x, r_a, s_a, score_range)
        except ValidationError as exc:
            raise type(exc)(f"arm a: {exc}") from None
        try:
            b = EvalDataset.from_arrays(a.x, r_b, s_b, score_range)
        except ValidationError as exc:
            raise type(exc)(f"arm b: {exc}") from None
        return cls(a, EvalDataset(a.x, b.r, b.s, b.score_range))

    @property
    def x(self):
        return self.a.x

    @property
    def n(self):
        return self.a.n

    def __len__(self):
        return self.a.n

    def arm(self, name):
        return {"a": self.a, "b": self.b}[name.lower()]

    def head(self, n):
        return PairedDataset(self.a.head(n), self.b.head(n))

    def __repr__(self):
        return f"PairedDataset(n={self.n}, d={self.a.d})"


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    coverage: float
    selective_score: float  # nan when every row abstained
    abstention_count: int

    @property
    def selective_score_defined(self):
        return self.abstention_count < self.n


def summarize(ds: EvalDataset) -> DatasetSummary:
    """Coverage (share of revealed predictions) and selective score (their mean)."""
    n = ds.n
    abstained = int(ds.r.sum())
    observed = n - abstained
    selective = math.fsum(ds.s.compressed()) / observed if observed else math.nan
    return DatasetSummary(n=n, coverage=observed / n, selective_score=selective,
                          abstention_count=abstained)
