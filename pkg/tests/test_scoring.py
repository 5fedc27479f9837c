import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfscore.errors import InvalidProbabilities, LabelOutOfRange
from cfscore.scoring import accuracy_score, brier_score, score


@pytest.mark.parametrize("p,y,expected", [((0.9, 0.1), 1, 1.0), ((0.5, 0.5), 1, 1.0),
                                          ((0.2, 0.8), 1, 0.0), ((0.5, 0.5), 2, 0.0)])
def test_accuracy_examples(p, y, expected):
    assert accuracy_score(p, y) == expected


@pytest.mark.parametrize("p,y,expected", [((0.0, 1.0, 0.0), 2, 1.0), ((0.5, 0.5), 1, 0.5),
                                          ((0.5, 0.5), 2, 0.5), ((0.3, 0.7), 2, 0.82)])
def test_brier_examples(p, y, expected):
    assert brier_score(p, y) == pytest.approx(expected, abs=1e-12)


def test_label_and_probability_checks():
    with pytest.raises(LabelOutOfRange):
        accuracy_score((0.5, 0.5), 3)
    with pytest.raises(LabelOutOfRange):
        brier_score((0.5, 0.5), 0)
    with pytest.raises(InvalidProbabilities):
        brier_score((0.5, 0.6), 1)
    with pytest.raises(ValueError):
        score("log", (0.5, 0.5), 1)


def test_vectorized_matches_rowwise():
    p = np.array([[0.1, 0.9], [0.6, 0.4], [0.5, 0.5]])
    y = np.array([2, 2, 1])
    assert accuracy_score(p, y).tolist() == [accuracy_score(p[i], y[i]) for i in range(3)]
    assert brier_score(p, y).tolist() == [brier_score(p[i], y[i]) for i in range(3)]


@st.composite
def prediction(draw):
    C = draw(st.integers(2, 6))
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=C, max_size=C)))
    if w.sum() == 0:
        w[0] = 1.0
    p = w / w.sum()
    p[-1] = 1.0 - p[:-1].sum()
    p = np.clip(p, 0, 1)
    y = draw(st.integers(1, C))
    return p, y


@settings(max_examples=200, deadline=None)
@given(prediction(), st.randoms(use_true_random=False))
def test_ranges_and_class_permutation(pred, rnd):
    p, y = pred
    b = brier_score(p, y)
    assert -1.0 - 1e-12 <= b <= 1.0 + 1e-12
    assert accuracy_score(p, y) in (0.0, 1.0)
    perm = list(range(len(p)))
    rnd.shuffle(perm)
    q = p[perm]
    z = perm.index(y - 1) + 1
    assert brier_score(q, z) == pytest.approx(b, abs=1e-12)
    if np.sum(p == p.max()) == 1:  # permutation changes ties only
        assert accuracy_score(q, z) == accuracy_score(p, y)


def test_brier_extremes():
    assert brier_score((1.0, 0.0, 0.0), 1) == 1.0
    assert brier_score((0.0, 1.0, 0.0), 1) == -1.0
