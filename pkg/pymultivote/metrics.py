"""Evaluation metrics for released label vectors.

Predictions and scores are m×k arrays (one row per query, one column per
label); a single label may be given as a flat array. Unanswered labels
(⊥) are given as `None` or NaN and are left out of the scoring of that
label. A metric that is undefined for a label is reported as `None` and
left out of the macro average.
"""


from collections import namedtuple

import numpy as np
from scipy import stats

from .exceptions import InvalidParameterError

MetricValues = namedtuple("MetricValues", ["per_label", "macro"])
MetricValues.__doc__ = """A metric per label and its unweighted mean.

Attributes:
    per_label (list): One float, or `None` when undefined, per label.
    macro (float): The mean over the defined labels, `None` if there are
        none.
"""


def _as_matrix(values):
    """Return ``values`` as a float m×k matrix with ⊥ as NaN."""
    array = np.array(values, dtype=object)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise InvalidParameterError("Expected an m x k array")
    return np.array(
        [[np.nan if value is None else float(value) for value in row] for row in array],
        dtype=np.float64,
    ).reshape(array.shape)


def _macro(per_label):
    defined = [value for value in per_label if value is not None]
    return MetricValues(per_label, float(np.mean(defined)) if defined else None)


class ConfusionCounts:

    """True/false positive/negative counts per label.

    For every label ``tp + fp + tn + fn`` is the number of scored (non-⊥)
    examples of that label.
    """

    def __init__(self, tp, fp, tn, fn):
        self.tp = np.asarray(tp, dtype=np.int64)
        self.fp = np.asarray(fp, dtype=np.int64)
        self.tn = np.asarray(tn, dtype=np.int64)
        self.fn = np.asarray(fn, dtype=np.int64)

    @property
    def k(self):
        """int: The number of labels."""
        return self.tp.shape[0]

    def scored(self):
        """Return the number of scored examples per label."""
        return self.tp + self.fp + self.tn + self.fn

    def __repr__(self):
        return "{}(tp={}, fp={}, tn={}, fn={})".format(
            self.__class__.__name__,
            self.tp.tolist(),
            self.fp.tolist(),
            self.tn.tolist(),
            self.fn.tolist(),
        )


def confusion_counts(predictions, truth):
    """Count the outcomes of released bits against the true bits.

    Args:
        predictions (array_like): Released bits, ⊥ as `None` or NaN.
        truth (array_like): The true bits, same shape.

    Returns:
        ConfusionCounts: The counts per label.
    """
    predictions = _as_matrix(predictions)
    truth = _as_matrix(truth)
    if predictions.shape != truth.shape:
        raise InvalidParameterError(
            "Predictions {} and truth {} differ in shape".format(
                predictions.shape, truth.shape
            )
        )
    scored = ~np.isnan(predictions)
    positive = predictions == 1
    actual = truth == 1
    return ConfusionCounts(
        tp=np.sum(scored & positive & actual, axis=0),
        fp=np.sum(scored & positive & ~actual, axis=0),
        tn=np.sum(scored & ~positive & ~actual, axis=0),
        fn=np.sum(scored & ~positive & actual, axis=0),
    )


def accuracy(counts):
    """Return (TP + TN) / (TP + TN + FP + FN) per label.

    >>> accuracy(ConfusionCounts([1], [1], [1], [1])).per_label
    [0.5]
    """
    per_label = []
    for index in range(counts.k):
        total = counts.scored()[index]
        if total == 0:
            per_label.append(None)
        else:
            per_label.append(float(counts.tp[index] + counts.tn[index]) / total)
    return _macro(per_label)


def balanced_accuracy(counts):
    """Return ½(TP/(TP + FN) + TN/(TN + FP)) per label.

    When one class never occurs in the truth of a label, only the other half
    is defined and is returned on its own.
    """
    per_label = []
    for index in range(counts.k):
        halves = []
        positives = counts.tp[index] + counts.fn[index]
        negatives = counts.tn[index] + counts.fp[index]
        if positives:
            halves.append(counts.tp[index] / positives)
        if negatives:
            halves.append(counts.tn[index] / negatives)
        per_label.append(float(np.mean(halves)) if halves else None)
    return _macro(per_label)


def _scored_columns(scores, truth):
    scores = _as_matrix(scores)
    truth = _as_matrix(truth)
    if scores.shape != truth.shape:
        raise InvalidParameterError("Scores and truth differ in shape")
    for index in range(scores.shape[1]):
        keep = ~np.isnan(scores[:, index])
        yield scores[keep, index], truth[keep, index] == 1


def auc(scores, truth):
    """Return the area under the ROC curve per label.

    Computed from midranks (the Mann-Whitney statistic), so tied scores
    count half a win. Undefined for labels whose scored examples are all of
    one class.

    >>> auc([0.9, 0.4, 0.6], [1, 1, 0]).per_label
    [0.5]
    """
    per_label = []
    for column, actual in _scored_columns(scores, truth):
        positives = int(np.count_nonzero(actual))
        negatives = actual.size - positives
        if positives == 0 or negatives == 0:
            per_label.append(None)
            continue
        ranks = stats.rankdata(column)
        statistic = ranks[actual].sum() - positives * (positives + 1) / 2.0
        per_label.append(float(statistic / (positives * negatives)))
    return _macro(per_label)


def average_precision(column, actual):
    """Return the mean of the precision at the rank of every positive.

    Examples are ranked by decreasing score, ties in input order. Returns
    `None` if there is no positive.
    """
    positives = int(np.count_nonzero(actual))
    if positives == 0:
        return None
    order = np.argsort(-column, kind="stable")
    hits = np.cumsum(actual[order])
    ranks = np.arange(1, column.size + 1)
    return float(np.sum((hits / ranks)[actual[order]]) / positives)


def mean_average_precision(scores, truth):
    """Return the average precision per label and their mean (MAP).

    Raises:
        InvalidParameterError: if no label has a positive example.

    >>> round(mean_average_precision([0.9, 0.8, 0.7], [1, 0, 1]).macro, 4)
    0.8333
    """
    per_label = [
        average_precision(column, actual)
        for column, actual in _scored_columns(scores, truth)
    ]
    if all(value is None for value in per_label):
        raise InvalidParameterError("Mean average precision needs a positive example")
    return _macro(per_label)


def metric_report(predictions, truth, answered_fraction):
    """Score released vectors against the truth.

    The released bits double as the scores for AUC and MAP.

    Args:
        predictions (array_like): Released bits per query, ⊥ as `None`.
        truth (array_like): The true bits.
        answered_fraction (float): The share of queries answered.

    Returns:
        dict: ``{"per_label": {...}, "macro": {...}, "answered_fraction": x}``
        with the keys ``acc``, ``bac``, ``auc`` and ``map``.
    """
    counts = confusion_counts(predictions, truth)
    values = {
        "acc": accuracy(counts),
        "bac": balanced_accuracy(counts),
        "auc": auc(predictions, truth),
    }
    try:
        values["map"] = mean_average_precision(predictions, truth)
    except InvalidParameterError:
        values["map"] = MetricValues([None] * counts.k, None)
    return {
        "per_label": {name: value.per_label for name, value in values.items()},
        "macro": {name: value.macro for name, value in values.items()},
        "answered_fraction": answered_fraction,
    }
