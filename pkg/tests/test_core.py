import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfscore.core import (
    BRIER_RANGE,
    EvalDataset,
    EvalRecord,
    PairedDataset,
    summarize,
    validate_dataset,
)
from cfscore.errors import (
    DimensionMismatch,
    EmptyDataset,
    MissingScoreOnPrediction,
    PresentScoreOnAbstention,
    ScoreRangeViolation,
    ValidationError,
)


def test_score_on_abstained_row_rejected():
    with pytest.raises(PresentScoreOnAbstention):
        validate_dataset([([0.1, 0.2], 1, 0.5)])


def test_empty_rows_rejected():
    with pytest.raises(EmptyDataset):
        validate_dataset([])


def test_minimal_valid_dataset():
    ds = validate_dataset([([0, 0], 0, 1.0), ([1, 1], 1, None)])
    assert (ds.n, ds.d) == (2, 2)
    assert ds.s.mask.tolist() == [False, True]


def test_missing_score_and_dimension_errors():
    with pytest.raises(MissingScoreOnPrediction):
        validate_dataset([([0.0], 0, None)])
    with pytest.raises(DimensionMismatch):
        validate_dataset([([0.0, 1.0], 0, 1.0), ([0.0], 1, None)])


def test_score_range_checked():
    with pytest.raises(ScoreRangeViolation):
        validate_dataset([([0.0], 0, 1.5)])
    ds = validate_dataset([([0.0], 0, -0.5)], score_range=BRIER_RANGE)
    assert ds.s[0] == -0.5


def test_record_invariants():
    EvalRecord((0.0,), 1)
    with pytest.raises(ValidationError):
        EvalRecord((0.0,), 2)
    with pytest.raises(MissingScoreOnPrediction):
        EvalRecord((0.0,), 0)


def test_summary_direct_count():
    ds = validate_dataset([([0.0], 0, 1.0), ([1.0], 0, 0.0), ([2.0], 1, None)])
    summ = summarize(ds)
    assert summ.coverage == pytest.approx(2 / 3)
    assert summ.selective_score == 0.5
    assert summ.abstention_count == 1


def test_summary_all_abstained():
    ds = EvalDataset.from_arrays(np.zeros((3, 1)), [1, 1, 1], [None] * 3)
    summ = summarize(ds)
    assert summ.coverage == 0.0
    assert not summ.selective_score_defined
    assert np.isnan(summ.selective_score)


def test_arrays_are_read_only():
    ds = EvalDataset.from_arrays(np.zeros((2, 1)), [0, 1], [1.0, None])
    with pytest.raises(ValueError):
        ds.r[0] = 1


def test_paired_errors_name_the_arm():
    with pytest.raises(PresentScoreOnAbstention, match="arm b"):
        PairedDataset.from_arrays(np.zeros((2, 1)), [0, 0], [1.0, 0.0], [1, 0], [1.0, 0.0])


def test_records_round_trip():
    rows = [([0.5, 1.0], 0, 0.25), ([0.1, 0.2], 1, None)]
    ds = validate_dataset(rows)
    again = validate_dataset([(r.x, r.r, r.s) for r in ds.records()])
    assert np.array_equal(again.x, ds.x) and np.array_equal(again.r, ds.r)
    assert np.array_equal(again.scores_or_zero(), ds.scores_or_zero())


rows_strategy = st.lists(
    st.tuples(st.floats(-10, 10), st.booleans(), st.floats(0, 1)), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(rows_strategy, st.randoms(use_true_random=False))
def test_summary_properties(rows, rnd):
    data = [([x], int(a), None if a else s) for x, a, s in rows]
    summ = summarize(validate_dataset(data))
    assert 0.0 <= summ.coverage <= 1.0
    assert summ.coverage * summ.n == pytest.approx(round(summ.coverage * summ.n))
    assert summ.coverage == (summ.n - summ.abstention_count) / summ.n
    assert summ.selective_score_defined == (summ.abstention_count < summ.n)
    rnd.shuffle(data)
    shuffled = summarize(validate_dataset(data))
    assert shuffled.coverage == summ.coverage
    if summ.selective_score_defined:
        assert shuffled.selective_score == summ.selective_score
