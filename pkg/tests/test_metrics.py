"""Tests for the metrics module."""


import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pymultivote.exceptions import InvalidParameterError
from pymultivote.metrics import (
    ConfusionCounts,
    accuracy,
    auc,
    average_precision,
    balanced_accuracy,
    confusion_counts,
    mean_average_precision,
    metric_report,
)

PREDICTIONS = [[1, 0], [0, None], [1, 1]]
TRUTH = [[1, 0], [1, 1], [0, 1]]

scored_pairs = st.lists(
    st.tuples(st.integers(-50, 50), st.booleans()), min_size=2, max_size=30
).filter(lambda pairs: 0 < sum(actual for _, actual in pairs) < len(pairs))


def test_confusion_counts():
    counts = confusion_counts(PREDICTIONS, TRUTH)
    assert counts.tp.tolist() == [1, 1]
    assert counts.fp.tolist() == [1, 0]
    assert counts.tn.tolist() == [0, 1]
    assert counts.fn.tolist() == [1, 0]
    # The unanswered label is not scored
    assert counts.scored().tolist() == [3, 2]
    assert counts.k == 2


def test_confusion_counts_shape_mismatch():
    with pytest.raises(InvalidParameterError):
        confusion_counts([[1, 0]], [[1, 0, 1]])


def test_accuracy():
    result = accuracy(confusion_counts(PREDICTIONS, TRUTH))
    assert result.per_label == pytest.approx([1 / 3, 1.0])
    assert result.macro == pytest.approx(2 / 3)


def test_balanced_accuracy():
    result = balanced_accuracy(confusion_counts(PREDICTIONS, TRUTH))
    assert result.per_label == pytest.approx([0.25, 1.0])
    assert result.macro == pytest.approx(0.625)


def test_balanced_accuracy_with_one_class():
    result = balanced_accuracy(confusion_counts([1, 0, 1], [1, 1, 1]))
    assert result.per_label == pytest.approx([2 / 3])


def test_nothing_scored_is_undefined():
    counts = confusion_counts([[None, 1]], [[1, 1]])
    assert accuracy(counts).per_label == [None, 1.0]
    assert accuracy(counts).macro == 1.0
    assert balanced_accuracy(ConfusionCounts([0], [0], [0], [0])).macro is None


def test_auc():
    assert auc([0.9, 0.4, 0.6], [1, 1, 0]).per_label == [0.5]
    assert auc([0.9, 0.8, 0.1], [1, 1, 0]).per_label == [1.0]
    # Ties count half
    assert auc([0.5, 0.5], [1, 0]).per_label == [0.5]
    assert auc([0.2, 0.3], [1, 1]).per_label == [None]


def _brute_force_auc(scores, actual):
    wins = 0.0
    pairs = 0
    for positive in scores[actual]:
        for negative in scores[~actual]:
            pairs += 1
            wins += 1.0 if positive > negative else 0.5 if positive == negative else 0.0
    return wins / pairs


def test_auc_matches_pair_counting(rng):
    checked = 0
    while checked < 200:
        size = int(rng.integers(2, 25))
        scores = rng.integers(0, 5, size=size).astype(float)
        actual = rng.random(size) < 0.4
        if actual.all() or not actual.any():
            continue
        result = auc(scores, actual.astype(int)).per_label[0]
        assert result == pytest.approx(_brute_force_auc(scores, actual))
        checked += 1


@given(scored_pairs)
def test_auc_and_map_ignore_monotone_rescaling(pairs):
    scores = np.array([score for score, _ in pairs], dtype=float)
    truth = [int(actual) for _, actual in pairs]
    rescaled = scores ** 3 + 2 * scores
    assert auc(rescaled, truth).macro == pytest.approx(auc(scores, truth).macro)
    assert mean_average_precision(rescaled, truth).macro == pytest.approx(
        mean_average_precision(scores, truth).macro
    )


def test_average_precision():
    assert average_precision(
        np.array([0.9, 0.8, 0.7]), np.array([True, False, True])
    ) == pytest.approx(5 / 6)
    # Ties keep input order
    assert average_precision(
        np.array([0.5, 0.5]), np.array([False, True])
    ) == pytest.approx(0.5)
    assert average_precision(np.array([0.5]), np.array([False])) is None


def test_mean_average_precision():
    scores = [[0.9, 0.1], [0.8, 0.7], [0.7, 0.2]]
    result = mean_average_precision(scores, [[1, 0], [0, 1], [1, 0]])
    assert result.per_label == pytest.approx([5 / 6, 1.0])
    assert result.macro == pytest.approx(11 / 12)
    with pytest.raises(InvalidParameterError):
        mean_average_precision([0.4, 0.2], [0, 0])


def test_metric_report():
    report = metric_report(PREDICTIONS, TRUTH, 0.75)
    assert set(report["per_label"]) == {"acc", "bac", "auc", "map"}
    assert report["macro"]["acc"] == pytest.approx(2 / 3)
    assert report["answered_fraction"] == 0.75
    assert report["per_label"]["auc"] == pytest.approx([0.25, 1.0])


def test_metric_report_without_positives():
    report = metric_report([[0], [0]], [[0], [0]], 1.0)
    assert report["macro"]["acc"] == 1.0
    assert report["macro"]["map"] is None
    assert report["per_label"]["map"] == [None]
    assert report["macro"]["auc"] is None


def test_metric_report_of_no_queries():
    report = metric_report(np.zeros((0, 2)), np.zeros((0, 2)), 0.0)
    assert report["macro"]["acc"] is None
    assert report["per_label"]["acc"] == [None, None]
