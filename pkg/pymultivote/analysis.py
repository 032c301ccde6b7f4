"""Data-dependent privacy analysis and sensitivity checks.

A noisy argmax whose plurality is far ahead of the runner-up almost always
returns the plurality, and a release that is nearly deterministic leaks
little. This module turns a vote histogram into

* an upper bound q on the probability that the noisy argmax misses the
  plurality (`gap_bound_q`),
* a Rényi bound that uses q together with the mechanism's guarantees at two
  higher orders (`theorem_bound`), selected per order against the
  data-independent curve (`data_dependent_curve`),
* closed-form estimates for well separated histograms (`approx_bound`) and
  for the expected Powerset gap under a balls-and-bins model
  (`powerset_gap_estimate`).

It also holds the brute-force `sensitivity_oracle` used to check the
sensitivity claims the pricing in `pymultivote.accountant` relies on.
"""


import functools
import itertools
import logging
import math
from collections import namedtuple

import numpy as np
from scipy import special, stats

from . import config
from .accountant import RdpCurve
from .ballots import L2, BallotMatrix, LabelHistogram, clip
from .exceptions import DomainTooLargeError, InvalidParameterError

_LOG = logging.getLogger(__name__)


def _log1mexp(x):
    """Numerically stable computation of log(1-exp(x))."""
    if x < -1:
        return math.log1p(-math.exp(x))
    if x < 0:
        return math.log(-math.expm1(x))
    if x == 0:
        return -math.inf
    raise ValueError("Argument must be non-positive.")


class GapReport:

    """The gap summary of a vote histogram under noise ``sigma``.

    Attributes:
        counts (numpy.ndarray): The counts, sorted in decreasing order.
        q_tilde (float): The simple gap n₁ - n₂.
        log_q (float): ln q, -inf when the argmax is certain.
        plurality (int): Index of the plurality in the input order.
    """

    def __init__(self, counts, q_tilde, log_q, plurality):
        self.counts = counts
        self.q_tilde = q_tilde
        self.log_q = log_q
        self.plurality = plurality

    @property
    def q(self):
        """float: The bound q in [0, 1] on Pr[noisy argmax != plurality]."""
        return math.exp(self.log_q)

    def __repr__(self):
        return "{}(q_tilde={!r}, q={!r})".format(
            self.__class__.__name__, self.q_tilde, self.q
        )


def gap_bound_q(histogram, sigma, zero_bins=0):
    """Bound the probability that a Gaussian noisy argmax misses the
    plurality.

    q = min(1, ½ Σ_{i≠i*} erfc((n_{i*} - n_i) / (2σ))) with i* the first
    index of the maximum. The sum is evaluated in log space so bounds far
    below the float range stay usable through `GapReport.log_q`.

    Args:
        histogram (array_like): Non-negative counts, one per bin.
        sigma (float): Standard deviation of the noise added to each bin.
        zero_bins (int): Additional bins with count 0 that are not listed,
            such as the outcomes nobody voted for in a Powerset histogram.

    Returns:
        GapReport: The sorted counts, simple gap and bound.

    Raises:
        InvalidParameterError: for an empty histogram, negative counts or a
            non-positive ``sigma``.

    >>> gap_bound_q([5, 5], 1.0).q
    0.5
    """
    counts = np.asarray(histogram, dtype=np.float64).reshape(-1)
    if counts.size == 0:
        raise InvalidParameterError("Cannot bound the gap of an empty histogram")
    if np.any(counts < 0):
        raise InvalidParameterError("Vote counts must be non-negative")
    if not sigma > 0:
        raise InvalidParameterError("sigma must be positive, got %r" % sigma)
    plurality = int(np.argmax(counts))
    top = counts[plurality]
    rest = np.delete(counts, plurality)
    # ½·erfc(d / 2σ) is the tail of N(0, 2σ²) beyond d
    scale = math.sqrt(2.0) * sigma
    log_terms = list(stats.norm.logsf(top - rest, scale=scale))
    if zero_bins:
        log_terms.append(math.log(zero_bins) + stats.norm.logsf(top, scale=scale))
    log_q = min(float(special.logsumexp(log_terms)), 0.0) if log_terms else -math.inf
    ordered = np.sort(np.concatenate([counts, np.zeros(min(zero_bins, 1))]))[::-1]
    q_tilde = float(ordered[0] - ordered[1]) if ordered.size > 1 else float(top)
    return GapReport(ordered, q_tilde, log_q, plurality)


class DataDependentParams:

    """The two higher-order guarantees the data-dependent bound builds on.

    The mechanism satisfies (μ₁, ε₁)-RDP and (μ₂, ε₂)-RDP.
    """

    def __init__(self, mu1, mu2, eps1, eps2):
        if not (mu1 > 1 and mu2 > 1):
            raise InvalidParameterError("Higher orders must exceed 1")
        if not (eps1 >= 0 and eps2 >= 0):
            raise InvalidParameterError("RDP values must be non-negative")
        self.mu1 = float(mu1)
        self.mu2 = float(mu2)
        self.eps1 = float(eps1)
        self.eps2 = float(eps2)

    @classmethod
    def for_linear_curve(cls, mu2, slope):
        """Return the parameters for a mechanism with ε(μ) = slope·μ and
        μ₁ = μ₂ + 1."""
        mu1 = mu2 + 1.0
        return cls(mu1, mu2, slope * mu1, slope * mu2)

    def violation(self, log_q, order):
        """Return why the bound does not apply, or `None` if it does.

        Args:
            log_q (float): ln q̃.
            order (float): The order λ the bound is wanted at.
        """
        if order > self.mu1:
            return "order above mu1"
        if -log_q <= self.eps2:
            return "q too large for mu2"
        limit = (self.mu2 - 1) * self.eps2 - self.mu2 * (
            math.log1p(1 / (self.mu1 - 1)) + math.log1p(1 / (self.mu2 - 1))
        )
        if log_q > limit:
            return "q outside the increasing range"
        return None

    def __repr__(self):
        return "{}(mu1={:g}, mu2={:g}, eps1={:g}, eps2={:g})".format(
            self.__class__.__name__, self.mu1, self.mu2, self.eps1, self.eps2
        )


class BoundFailure:

    """Returned by `theorem_bound` when a side-condition does not hold.

    Callers fall back to the data-independent bound. It is falsy so
    ``bound or fallback`` reads naturally.
    """

    def __init__(self, reason):
        #: `str`: The side-condition that failed
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return "{}({!r})".format(self.__class__.__name__, self.reason)


def theorem_bound(q_tilde, params, order, log_q=None):
    """Bound the Rényi divergence at ``order`` of a mechanism whose likely
    outcome is missed with probability at most ``q_tilde``.

    Returns (1/(λ-1))·ln((1-q̃)·A^(λ-1) + q̃·B^(λ-1)) with
    A = (1-q̃) / (1 - (q̃·e^ε₂)^((μ₂-1)/μ₂)) and B = e^ε₁ / q̃^(1/(μ₁-1)).
    The side-conditions are λ ≤ μ₁, ε₂ < ln(1/q̃) and
    ln q̃ ≤ (μ₂-1)ε₂ - μ₂·(ln(μ₁/(μ₁-1)) + ln(μ₂/(μ₂-1))).

    Args:
        q_tilde (float): The bound q̃ in [0, 1].
        params (DataDependentParams): The higher-order guarantees.
        order (float): The order λ > 1.
        log_q (float, optional): ln q̃, used instead of ``q_tilde`` when
            given so that bounds below the float range keep their precision.

    Returns:
        float or BoundFailure: The bound, or the failed side-condition.
    """
    if log_q is None:
        if not 0.0 <= q_tilde <= 1.0:
            raise InvalidParameterError("q must lie in [0, 1], got %r" % q_tilde)
        log_q = math.log(q_tilde) if q_tilde > 0 else -math.inf
    if not order > 1:
        raise InvalidParameterError("Rényi orders must exceed 1")
    if math.isinf(log_q):
        # The outcome is fixed, so the release leaks nothing
        return 0.0
    reason = params.violation(log_q, order)
    if reason is not None:
        return BoundFailure(reason)
    log1q = _log1mexp(log_q)
    log_a = (order - 1) * (
        log1q - _log1mexp((log_q + params.eps2) * (1 - 1 / params.mu2))
    )
    log_b = (order - 1) * (params.eps1 - log_q / (params.mu1 - 1))
    log_s = np.logaddexp(log1q + log_a, log_q + log_b)
    return max(0.0, float(log_s) / (order - 1))


def data_dependent_curve(counts, noise_sigma, slope, grid, zero_bins=0):
    """Price one noisy argmax over ``counts`` with the tighter of the
    data-dependent and data-independent bounds, order by order.

    The mechanism's data-independent guarantee is ε(λ) = slope·λ. For every
    order, μ₂ is tried at ``config.MU_SCALES`` multiples of
    √(ln(1/q) / slope), μ₁ = μ₂ + 1, and the smallest valid theorem bound
    is kept if it beats the data-independent value.

    Args:
        counts (array_like): The noiseless histogram.
        noise_sigma (float): Standard deviation of the noise on each bin.
        slope (float): ε(λ)/λ of the data-independent guarantee.
        grid (OrderGrid): The orders to price on.
        zero_bins (int): Unlisted bins with count 0.

    Returns:
        tuple: ``(curve, report, used)`` with the released `RdpCurve`, the
        `GapReport` and a boolean array marking the orders where the
        data-dependent bound was used.
    """
    counts = tuple(float(count) for count in np.asarray(counts).reshape(-1))
    return _priced_curve(counts, float(noise_sigma), float(slope), grid, int(zero_bins))


@functools.lru_cache(maxsize=4096)
def _priced_curve(counts, noise_sigma, slope, grid, zero_bins):
    # Streams repeat histograms often; curves and reports are read-only
    report = gap_bound_q(counts, noise_sigma, zero_bins=zero_bins)
    orders = grid.as_array()
    independent = orders * slope
    released = independent.copy()
    used = np.zeros(len(grid), dtype=bool)
    if slope > 0 and report.log_q < 0:
        candidates = []
        if math.isinf(report.log_q):
            released[:] = 0.0
            used[:] = True
        else:
            base = math.sqrt(-report.log_q / slope)
            for scale in config.MU_SCALES:
                mu2 = scale * base
                if mu2 > 1:
                    candidates.append(DataDependentParams.for_linear_curve(mu2, slope))
        for index, order in enumerate(orders):
            for params in candidates:
                bound = theorem_bound(None, params, order, log_q=report.log_q)
                if isinstance(bound, BoundFailure):
                    continue
                if bound < released[index]:
                    released[index] = bound
                    used[index] = True
    _LOG.debug(
        "q_tilde=%g log_q=%g data-dependent at %d of %d orders",
        report.q_tilde,
        report.log_q,
        int(used.sum()),
        len(grid),
    )
    used.setflags(write=False)
    return RdpCurve(grid, released), report, used


def is_data_independent_always_optimal(teachers, bins, noise_sigma, slope, grid):
    """Tell whether even a unanimous vote gains nothing from the
    data-dependent analysis.

    The bound only improves as the gap grows, so if the unanimous histogram
    is priced at the data-independent curve every histogram is.

    Returns:
        bool: `True` if no order can be improved.
    """
    unanimous = np.zeros(bins)
    unanimous[0] = teachers
    _, _, used = data_dependent_curve(unanimous, noise_sigma, slope, grid)
    return not bool(np.any(used))


ApproxBound = namedtuple("ApproxBound", ["order", "epsilon", "in_regime"])
ApproxBound.__doc__ = """The closed-form bound for a well separated histogram.

Attributes:
    order (float): λ = gap / 4.
    epsilon (float): exp(-2λ/σ²) / λ.
    in_regime (bool): Whether the separation the estimate assumes holds.
"""


def approx_bound(gap, sigma, second_gap=None, warn=True):
    """Estimate the data-dependent bound of a histogram whose top counts are
    far apart.

    With λ = gap / 4 the bound is about exp(-2λ/σ²) / λ. The estimate
    assumes n₁ - n₂ and n₂ - n₃ are both at least
    ``config.APPROX_GAP_MULTIPLE`` noise deviations and λ > 1; otherwise the
    result is flagged out of regime and callers should use `theorem_bound`.

    Args:
        gap (float): n₁ - n₂, positive.
        sigma (float): The noise standard deviation.
        second_gap (float, optional): n₂ - n₃ when known.
        warn (bool): Log a warning when out of regime.

    Returns:
        ApproxBound: The order, bound and regime flag.

    Raises:
        InvalidParameterError: if ``gap`` or ``sigma`` is not positive.
    """
    if not gap > 0:
        raise InvalidParameterError("The gap must be positive, got %r" % gap)
    if not sigma > 0:
        raise InvalidParameterError("sigma must be positive, got %r" % sigma)
    order = gap / 4.0
    epsilon = math.exp(-2.0 * order / sigma ** 2) / order
    minimum = config.APPROX_GAP_MULTIPLE * sigma
    in_regime = order > 1 and gap >= minimum
    if second_gap is not None:
        in_regime = in_regime and second_gap >= minimum
    if warn and not in_regime:
        _LOG.warning(
            "Approximate bound used outside its regime (gap=%g, sigma=%g)", gap, sigma
        )
    return ApproxBound(order, epsilon, in_regime)


def powerset_gap_estimate(teachers, p1):
    """Estimate the largest load of the most likely Powerset outcome.

    Treating the t teachers as balls thrown into 2^k bins, the load c at
    which c collisions become likely solves c·ln(t·P₁) + c = c·ln(c), that
    is c = e·t·P₁. The gap estimate is c - 1, kept within [0, t].

    Args:
        teachers (int): The number of teachers t ≥ 1.
        p1 (float): Probability P₁ of the most likely outcome, in (0, 1).

    Returns:
        tuple: ``(c, q_tilde)``.

    Raises:
        InvalidParameterError: for ``p1`` outside (0, 1) or ``teachers`` < 1.
    """
    if not 0.0 < p1 < 1.0:
        raise InvalidParameterError("p1 must lie in (0, 1), got %r" % p1)
    if teachers < 1:
        raise InvalidParameterError("There must be at least one teacher")
    collisions = math.e * teachers * p1
    return collisions, min(max(0.0, collisions - 1.0), float(teachers))


def stirling_binom_upper(n, k):
    """Return the upper bound (e·n/k)^k on the binomial coefficient C(n, k).

    Raises:
        InvalidParameterError: unless 0 < k ≤ n.
    """
    if not 0 < k <= n:
        raise InvalidParameterError("Need 0 < k <= n, got n={}, k={}".format(n, k))
    return (math.e * n / k) ** k


def empirical_flip_rate(counts, sigma, trials, rng, chunk=10000):
    """Estimate Pr[noisy argmax != argmax] by simulation.

    This is the quantity `gap_bound_q` bounds from above.

    Args:
        counts (array_like): The histogram.
        sigma (float): Noise standard deviation per bin.
        trials (int): Number of noisy draws.
        rng (numpy.random.Generator): The noise source.
        chunk (int): Draws per vectorised batch.

    Returns:
        float: The fraction of draws whose argmax differs.
    """
    counts = np.asarray(counts, dtype=np.float64)
    plurality = int(np.argmax(counts))
    flips = 0
    remaining = trials
    while remaining > 0:
        size = min(chunk, remaining)
        noisy = counts + rng.normal(0.0, sigma, size=(size, counts.size))
        flips += int(np.count_nonzero(np.argmax(noisy, axis=1) != plurality))
        remaining -= size
    return flips / trials


class SensitivityReport:

    """The exact sensitivity of a function over a small ballot space.

    Attributes:
        p (float): The norm.
        value (float): Δ_p.
        witness (tuple): Two `BallotMatrix` differing in exactly one row for
            which the distance is Δ_p.
    """

    def __init__(self, p, value, witness):
        self.p = p
        self.value = value
        self.witness = witness

    def __repr__(self):
        return "{}(p={!r}, value={!r})".format(
            self.__class__.__name__, self.p, self.value
        )


REPLACE = "replace"
BLANK = "blank"


def sensitivity_oracle(function, voters, candidates, p, adjacency=REPLACE):
    """Compute the exact ℓp sensitivity of ``function`` by enumerating every
    ballot matrix of ``voters`` × ``candidates`` and every pair differing in
    one row.

    With ``REPLACE`` adjacency the differing row may change from any ballot
    to any other. With ``BLANK`` adjacency one side of the pair is the
    all-zero ballot, a voter who approves of nothing; this is the neighbour
    relation under which a clipped ballot moves the histogram by at most its
    own norm.

    Args:
        function (callable): Maps a `BallotMatrix` to a real vector.
        voters (int): The number of rows n.
        candidates (int): The number of columns k.
        p (float): The norm, ``numpy.inf`` allowed.
        adjacency (str): `REPLACE` or `BLANK`.

    Returns:
        SensitivityReport: Δ_p and a witnessing pair.

    Raises:
        DomainTooLargeError: if n or k exceeds ``config.ORACLE_MAX_VOTERS``
            or ``config.ORACLE_MAX_CANDIDATES``.
    """
    if voters > config.ORACLE_MAX_VOTERS or candidates > config.ORACLE_MAX_CANDIDATES:
        raise DomainTooLargeError(
            "Refusing to enumerate {} voters over {} candidates".format(
                voters, candidates
            )
        )
    if voters < 1 or candidates < 1:
        raise InvalidParameterError("Need at least one voter and one candidate")
    rows = [
        np.array(bits, dtype=np.uint8)
        for bits in itertools.product((0, 1), repeat=candidates)
    ]
    size = len(rows)
    outputs = [
        np.asarray(function(BallotMatrix([rows[index] for index in choice])), float)
        for choice in itertools.product(range(size), repeat=voters)
    ]
    # Axis j holds the ballot of voter j, the last axis the function output
    table = np.stack(outputs).reshape((size,) * voters + (-1,))
    if adjacency == REPLACE:
        pairs = list(itertools.combinations(range(size), 2))
    elif adjacency == BLANK:
        # Row 0 of the enumeration is the all-zero ballot
        pairs = [(0, second) for second in range(1, size)]
    else:
        raise InvalidParameterError("Unknown adjacency %r" % adjacency)
    rest_shape = (size,) * (voters - 1)
    best, witness = -1.0, None
    for voter in range(voters):
        for first, second in pairs:
            difference = np.take(table, first, axis=voter) - np.take(
                table, second, axis=voter
            )
            distance = np.linalg.norm(
                difference.reshape(-1, difference.shape[-1]), ord=p, axis=1
            )
            flat = int(np.argmax(distance))
            if distance[flat] > best:
                best = float(distance[flat])
                others = np.unravel_index(flat, rest_shape) if rest_shape else ()
                witness = (voter, first, second, tuple(int(i) for i in others))
    voter, first, second, others = witness
    choice = list(others[:voter]) + [first] + list(others[voter:])
    left = BallotMatrix([rows[index] for index in choice])
    choice[voter] = second
    right = BallotMatrix([rows[index] for index in choice])
    return SensitivityReport(p, best, (left, right))


def positive_counts(ballots):
    """Score function: the positive count of every candidate."""
    return ballots.positive_counts()


def stacked_histogram(tau=None, norm=L2):
    """Return the score function (V⁰, V¹) stacked into one vector, with the
    ballots clipped at ``tau`` first when given."""

    def score(ballots):
        source = ballots if tau is None else clip(ballots, tau, norm)
        histogram = LabelHistogram.from_ballots(source)
        return np.concatenate([histogram.negative, histogram.positive])

    return score


def coordinate_independent(functions):
    """Combine per-candidate functions into one coordinate-independent
    function.

    Output block i depends only on column i of the ballots.

    Args:
        functions (list(callable)): ``functions[i]`` maps the 0/1 column of
            candidate i to a real vector.
    """

    def score(ballots):
        return np.concatenate(
            [
                np.atleast_1d(np.asarray(function(ballots.bits[:, index]), float))
                for index, function in enumerate(functions)
            ]
        )

    return score
