"""This module contains the ballot data structures and their file format.

A ballot is a row of k bits, one per candidate (label). A `BallotMatrix`
holds the ballots of the n voters (teachers) for one query. Clipping scales
each row into an ℓ1 or ℓ2 ball, and the histograms summarise a matrix the way
the mechanisms consume it: two bins per label, or one bin per distinct
ballot.

The file format is CSV with the header ``query_id,teacher_id,l0,...`` and one
row per teacher and query. Rows of one query need not be contiguous.
"""


import csv
import logging
from collections import OrderedDict

import numpy as np

from . import config
from .exceptions import BallotFormatError, EmptyBallotsError, InvalidParameterError

_LOG = logging.getLogger(__name__)

#: Clip rows to an ℓ1 ball
L1 = "l1"
#: Clip rows to an ℓ2 ball
L2 = "l2"
NORMS = (L1, L2)

_ORDS = {L1: 1, L2: 2}


class BallotMatrix:

    """The binary ballots of n voters over k candidates.

    Example:

        >>> ballots = BallotMatrix([[1, 0], [1, 1], [0, 0]])
        >>> ballots.n, ballots.k
        (3, 2)
        >>> ballots.positive_counts().tolist()
        [2.0, 1.0]
    """

    def __init__(self, bits):
        """
        Args:
            bits (array_like): An n×k array of 0/1 entries.

        Raises:
            EmptyBallotsError: if there are no voters.
            InvalidParameterError: if an entry is not binary or there are no
                candidates.
        """
        bits = np.asarray(bits)
        if bits.ndim != 2:
            raise InvalidParameterError("Ballots must form an n x k matrix")
        if bits.shape[0] == 0:
            raise EmptyBallotsError("A ballot matrix needs at least one voter")
        if bits.shape[1] == 0:
            raise InvalidParameterError("A ballot matrix needs at least one candidate")
        if not np.all((bits == 0) | (bits == 1)):
            raise InvalidParameterError("Ballot entries must be 0 or 1")
        bits = bits.astype(np.uint8)
        bits.setflags(write=False)
        #: `numpy.ndarray`: The read-only n×k ballots
        self.bits = bits

    @property
    def n(self):
        """int: The number of voters."""
        return self.bits.shape[0]

    @property
    def k(self):
        """int: The number of candidates."""
        return self.bits.shape[1]

    def positive_counts(self):
        """Return the number of votes each candidate received."""
        return self.bits.sum(axis=0).astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, BallotMatrix):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return "{}(n={}, k={})".format(self.__class__.__name__, self.n, self.k)


class ClippedBallots:

    """Ballots scaled row by row into a norm ball of radius τ.

    Every row is the original ballot times min(1, τ/‖b‖), so entries are
    reals in [0, 1].
    """

    def __init__(self, rows, tau, norm):
        """
        Args:
            rows (numpy.ndarray): The n×k clipped rows.
            tau (float): The clipping bound.
            norm (str): `L1` or `L2`.
        """
        rows = np.asarray(rows, dtype=np.float64)
        rows.setflags(write=False)
        #: `numpy.ndarray`: The clipped rows v_j
        self.rows = rows
        #: `float`: The clipping bound τ
        self.tau = tau
        #: `str`: The norm clipped in
        self.norm = norm

    @property
    def n(self):
        """int: The number of voters."""
        return self.rows.shape[0]

    @property
    def k(self):
        """int: The number of candidates."""
        return self.rows.shape[1]

    def positive_counts(self):
        """Return the clipped positive mass of each candidate."""
        return self.rows.sum(axis=0)

    def row_norms(self):
        """Return the norm of every row in the clipping norm."""
        return np.linalg.norm(self.rows, ord=_ORDS[self.norm], axis=1)

    def __repr__(self):
        return "{}(n={}, k={}, tau={}, norm={!r})".format(
            self.__class__.__name__, self.n, self.k, self.tau, self.norm
        )


def clip(ballots, tau, norm=L2):
    """Clip every ballot into the ``norm`` ball of radius ``tau``.

    Rows are scaled by min(1, τ/‖b_j‖). All-zero rows pass through
    unchanged. Clipping already clipped rows is the identity.

    Args:
        ballots (BallotMatrix or ClippedBallots): The ballots to clip.
        tau (float): The positive clipping bound.
        norm (str): `L1` or `L2`.

    Returns:
        ClippedBallots: The clipped ballots.

    Raises:
        InvalidParameterError: if ``tau`` is not positive or ``norm`` is
            unknown.

    >>> clip(BallotMatrix([[1, 1, 1, 1]]), 1.0).rows.tolist()
    [[0.5, 0.5, 0.5, 0.5]]
    """
    if not tau > 0:
        raise InvalidParameterError("tau must be positive, got %r" % tau)
    if norm not in NORMS:
        raise InvalidParameterError("Unknown clipping norm %r" % norm)
    rows = ballots.rows if isinstance(ballots, ClippedBallots) else ballots.bits
    rows = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(rows, ord=_ORDS[norm], axis=1)
    scale = np.ones_like(norms)
    over = norms > tau + config.CLIP_TOLERANCE
    scale[over] = tau / norms[over]
    clipped = ClippedBallots(rows * scale[:, np.newaxis], tau, norm)
    if not np.all(clipped.row_norms() <= tau + config.CLIP_TOLERANCE):
        raise InvalidParameterError(
            "Clipping to tau={} left a row above the bound".format(tau)
        )
    return clipped


def truncate(ballots, limit):
    """Keep at most ``limit`` positive candidates of every ballot.

    A ballot with more positives keeps the first ``limit`` of them in
    candidate order and drops the rest.

    Args:
        ballots (BallotMatrix): The ballots.
        limit (int): The number of positives kept, at least 1.

    Returns:
        BallotMatrix: The truncated ballots.

    Raises:
        InvalidParameterError: if ``limit`` is below 1.

    >>> truncate(BallotMatrix([[1, 1, 0, 1], [0, 0, 1, 0]]), 2).bits.tolist()
    [[1, 1, 0, 0], [0, 0, 1, 0]]
    """
    if limit < 1:
        raise InvalidParameterError("Need limit >= 1, got %r" % limit)
    bits = np.array(ballots.bits)
    bits[np.cumsum(bits, axis=1) > limit] = 0
    return BallotMatrix(bits)


class LabelHistogram:

    """Positive and negative vote mass per candidate.

    Before noise is added, ``negative[i] + positive[i] == n`` for every
    candidate whether or not the ballots were clipped; the negative count of
    clipped ballots is the mass they did not place on the candidate.
    """

    def __init__(self, positive, negative):
        """
        Args:
            positive (array_like): V¹, one entry per candidate.
            negative (array_like): V⁰, one entry per candidate.
        """
        #: `numpy.ndarray`: Positive counts V¹
        self.positive = np.asarray(positive, dtype=np.float64)
        #: `numpy.ndarray`: Negative counts V⁰
        self.negative = np.asarray(negative, dtype=np.float64)

    @classmethod
    def from_ballots(cls, ballots):
        """Build the histogram of a `BallotMatrix` or `ClippedBallots`."""
        positive = ballots.positive_counts()
        return cls(positive, ballots.n - positive)

    @property
    def k(self):
        """int: The number of candidates."""
        return self.positive.shape[0]

    def label_counts(self, index):
        """Return the two bins of candidate ``index`` as ``[V⁰, V¹]``."""
        return np.array([self.negative[index], self.positive[index]])

    def gaps(self):
        """Return |V¹ - V⁰| per candidate."""
        return np.abs(self.positive - self.negative)

    def __repr__(self):
        return "{}(positive={}, negative={})".format(
            self.__class__.__name__, self.positive.tolist(), self.negative.tolist()
        )


class PowersetHistogram:

    """Vote counts of the distinct ballots actually cast.

    Only outcomes present in the ballots have a bin; the other 2^k - (number
    of bins) outcomes are never materialised.
    """

    def __init__(self, counts, k):
        """
        Args:
            counts (dict): Maps outcome bit tuples to positive integer counts.
            k (int): The number of candidates.
        """
        # Canonical order so noise is drawn bin by bin reproducibly
        self._counts = OrderedDict(sorted(counts.items()))
        #: `int`: The number of candidates
        self.k = k

    @classmethod
    def from_ballots(cls, ballots):
        """Build the histogram of a `BallotMatrix`."""
        counts = {}
        for row in ballots.bits:
            key = tuple(int(bit) for bit in row)
            counts[key] = counts.get(key, 0) + 1
        return cls(counts, ballots.k)

    @property
    def outcomes(self):
        """list(tuple): The cast outcomes in canonical order."""
        return list(self._counts)

    @property
    def counts(self):
        """numpy.ndarray: Counts aligned with `outcomes`."""
        return np.array(list(self._counts.values()), dtype=np.float64)

    @property
    def total(self):
        """int: The number of ballots."""
        return int(sum(self._counts.values()))

    @property
    def uncast(self):
        """int: How many of the 2^k outcomes received no vote."""
        return 2 ** self.k - len(self._counts)

    def __len__(self):
        return len(self._counts)

    def __getitem__(self, outcome):
        return self._counts.get(tuple(outcome), 0)

    def __repr__(self):
        return "{}(bins={}, total={})".format(
            self.__class__.__name__, len(self._counts), self.total
        )


def label_names(k):
    """Return the default column names ``l0 .. l{k-1}``."""
    return ["l{}".format(index) for index in range(k)]


def _sort_key(query_id):
    # Numeric ids sort numerically, anything else after them by text
    try:
        return (0, int(query_id), "")
    except ValueError:
        return (1, 0, query_id)


def read_ballots(file_):
    """Parse a ballot CSV file.

    Args:
        file_ (file): An open text file.

    Returns:
        tuple: ``(names, queries)`` where ``names`` are the label columns and
        ``queries`` is an `OrderedDict` mapping each query id, in query id
        order, to its `BallotMatrix`.

    Raises:
        BallotFormatError: naming the line of the first malformed row.
    """
    reader = csv.reader(file_)
    try:
        header = next(reader)
    except StopIteration:
        return [], OrderedDict()
    if len(header) < 3 or header[0] != "query_id" or header[1] != "teacher_id":
        raise BallotFormatError(1, "expected header query_id,teacher_id,l0,...")
    names = header[2:]
    rows = {}
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise BallotFormatError(
                line_number,
                "expected {} fields, got {}".format(len(header), len(row)),
            )
        if any(value not in ("0", "1") for value in row[2:]):
            raise BallotFormatError(line_number, "label values must be 0 or 1")
        rows.setdefault(row[0], []).append([int(value) for value in row[2:]])
    queries = OrderedDict(
        (query_id, BallotMatrix(rows[query_id]))
        for query_id in sorted(rows, key=_sort_key)
    )
    _LOG.debug("Read %d queries over %d labels", len(queries), len(names))
    return names, queries


def write_ballots(file_, queries, names=None):
    """Write ballots in the format read by `read_ballots`.

    Args:
        file_ (file): An open text file.
        queries (Iterable): ``(query_id, BallotMatrix)`` pairs.
        names (list(str), optional): The label column names.
    """
    writer = csv.writer(file_, lineterminator="\n")
    header_written = False
    for query_id, ballots in queries:
        if not header_written:
            writer.writerow(
                ["query_id", "teacher_id"] + list(names or label_names(ballots.k))
            )
            header_written = True
        for teacher_id, row in enumerate(ballots.bits):
            writer.writerow([query_id, teacher_id] + [int(bit) for bit in row])
    if not header_written and names:
        writer.writerow(["query_id", "teacher_id"] + list(names))
