"""The differentially private multi-winner voting mechanisms.

Each mechanism takes the ballots of one query and releases a k-bit vector:

* **Binary** voting runs a two-bin noisy argmax per candidate: presence
  against absence. Its cost is the per-candidate cost composed over the
  candidates released.
* **τ** voting does the same over ballots clipped to an ℓ2 (or ℓ1) ball of
  radius τ, so one voter moves the whole stacked histogram by a bounded
  amount and the release is priced once for the vector.
* **Powerset** voting runs a single noisy argmax over the distinct ballots
  that were cast and releases the winning ballot.

All mechanisms optionally gate their release behind a noisy consensus check
(Confident GNMax): a candidate, or for Powerset the whole query, is only
answered if its largest count plus noise exceeds a threshold T; otherwise
the answer is ⊥ (`None`).

Noise is drawn from generators handed out by a `pymultivote.utils.RngFactory`
per candidate and purpose, so a query reproduces exactly from its seed.
"""


import logging
import math

import numpy as np

from .accountant import (
    OrderGrid,
    RdpCurve,
    clipped_sensitivity,
    compose,
    gaussian_rdp,
    gaussian_threshold_rdp,
)
from .analysis import data_dependent_curve
from .ballots import NORMS, L2, LabelHistogram, PowersetHistogram, clip, truncate
from .exceptions import EmptyBallotsError, InvalidParameterError, OracleModeError
from .utils import PURPOSE_RELEASE, PURPOSE_THRESHOLD, RngFactory

_LOG = logging.getLogger(__name__)

BINARY = "binary"
TAU = "tau"
POWERSET = "powerset"
KINDS = (BINARY, TAU, POWERSET)


class MechanismConfig:

    """One aggregation policy: the mechanism and its noise parameters.

    Example:

        >>> cfg = MechanismConfig(TAU, sigma_g=9.0, tau=1.8)
        >>> cfg.gated
        False
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        kind,
        sigma_g,
        sigma_t=0.0,
        threshold_t=0.0,
        tau=None,
        clip_norm=L2,
        oracle_mode=False,
        data_dependent=True,
    ):
        """
        Args:
            kind (str): `BINARY`, `TAU` or `POWERSET`.
            sigma_g (float): The release noise σ_G. Zero is only accepted in
                oracle mode.
            sigma_t (float): The consensus-check noise σ_T.
            threshold_t (float): The consensus threshold T; 0 disables the
                check.
            tau (float, optional): The clipping bound, required for `TAU`.
                For `POWERSET` it caps the positive candidates kept per
                ballot at ⌊τ⌋ and must be at least 1. `BINARY` ignores it.
            clip_norm (str): `pymultivote.ballots.L2` (default) or
                `pymultivote.ballots.L1`.
            oracle_mode (bool): Allow zero noise. Such releases are not
                differentially private and cost an infinite budget.
            data_dependent (bool): Price releases with the data-dependent
                bound where it is cheaper. `False` keeps every price at its
                data-independent value.

        Raises:
            InvalidParameterError: for an unknown kind or norm, negative noise
                or a missing τ.
            OracleModeError: for zero noise outside oracle mode.
        """
        if kind not in KINDS:
            raise InvalidParameterError("Unknown mechanism %r" % kind)
        if clip_norm not in NORMS:
            raise InvalidParameterError("Unknown clipping norm %r" % clip_norm)
        if sigma_g < 0 or sigma_t < 0 or threshold_t < 0:
            raise InvalidParameterError("Noise scales and threshold must be >= 0")
        if kind == TAU and not (tau is not None and tau > 0):
            raise InvalidParameterError("tau voting needs a positive tau")
        if kind == POWERSET and tau is not None and tau < 1:
            raise InvalidParameterError("Powerset voting needs tau >= 1 to keep a vote")
        #: `str`: The mechanism
        self.kind = kind
        #: `float`: Standard deviation σ_G of the release noise
        self.sigma_g = float(sigma_g)
        #: `float`: Standard deviation σ_T of the consensus-check noise
        self.sigma_t = float(sigma_t)
        #: `float`: The consensus threshold T
        self.threshold_t = float(threshold_t)
        #: `float`: The clipping bound τ
        self.tau = None if tau is None else float(tau)
        #: `str`: The clipping norm
        self.clip_norm = clip_norm
        #: `bool`: Whether zero noise is allowed
        self.oracle_mode = bool(oracle_mode)
        #: `bool`: Whether the data-dependent bound may lower prices
        self.data_dependent = bool(data_dependent)
        if not self.oracle_mode and (
            self.sigma_g == 0 or (self.gated and self.sigma_t == 0)
        ):
            raise OracleModeError(
                "Zero noise releases are not private; enable oracle mode to "
                "compute the noiseless election"
            )

    @property
    def gated(self):
        """bool: Whether releases are gated by the consensus check."""
        return self.threshold_t > 0

    @property
    def private(self):
        """bool: Whether every release made under this policy is private."""
        return self.sigma_g > 0 and (not self.gated or self.sigma_t > 0)

    def to_dict(self):
        """Return the policy as a JSON-compatible dict."""
        return {
            "kind": self.kind,
            "sigma_g": self.sigma_g,
            "sigma_t": self.sigma_t,
            "threshold_t": self.threshold_t,
            "tau": self.tau,
            "clip_norm": self.clip_norm,
            "oracle_mode": self.oracle_mode,
            "data_dependent": self.data_dependent,
        }

    @classmethod
    def from_dict(cls, data):
        """Rebuild a policy from `to_dict` output."""
        return cls(**data)

    def replace(self, **changes):
        """Return a copy with some fields changed."""
        values = self.to_dict()
        values.update(changes)
        return self.from_dict(values)

    def __repr__(self):
        return "{}({})".format(
            self.__class__.__name__,
            ", ".join("{}={!r}".format(*item) for item in self.to_dict().items()),
        )


class QueryOutcome:

    """The result of aggregating one query.

    Attributes:
        answered (bool): Whether anything was released.
        released (list): One entry per candidate: 1, 0 or `None` (⊥).
        cost (RdpCurve): The privacy cost of this query.
        diagnostics (dict): ``gap``, ``q`` and ``passed`` per candidate (one
            entry for Powerset), ``data_dependent`` (whether any order used
            the data-dependent bound) and ``private``.
    """

    def __init__(self, answered, released, cost, diagnostics):
        self.answered = answered
        self.released = released
        self.cost = cost
        self.diagnostics = diagnostics

    def to_record(self, query_id, eps_so_far):
        """Return the JSON Lines record of this outcome.

        Args:
            query_id: The id of the query.
            eps_so_far (float): The ε spent including this query.
        """
        return {
            "query_id": query_id,
            "answered": self.answered,
            "labels": list(self.released),
            "gap": [float(gap) for gap in self.diagnostics["gap"]],
            "eps_dp_so_far": eps_so_far,
        }

    def __repr__(self):
        return "{}(answered={!r}, released={!r})".format(
            self.__class__.__name__, self.answered, self.released
        )


def refused_record(query_id, k, eps_so_far):
    """Return the JSON Lines record of a query the budget refused.

    Nothing about the votes of a refused query is reported: every label is
    ⊥ and the gap list is empty.

    >>> refused_record(4, 2, 1.5)["labels"]
    [None, None]
    """
    return {
        "query_id": query_id,
        "answered": False,
        "labels": [None] * (k or 0),
        "gap": [],
        "eps_dp_so_far": eps_so_far,
    }


def deterministic_election(ballots, threshold):
    """Return the noiseless multi-winner outcome.

    Candidate i wins iff its vote count is strictly above the threshold.

    Args:
        ballots (BallotMatrix): The ballots.
        threshold (float or array_like): T, or one T_i per candidate.

    Returns:
        list(int): The k-bit outcome.

    >>> from pymultivote.ballots import BallotMatrix
    >>> deterministic_election(BallotMatrix([[1, 0], [1, 1], [0, 0]]), 1.5)
    [1, 0]
    """
    counts = ballots.positive_counts()
    return [int(bit) for bit in counts > np.asarray(threshold, dtype=np.float64)]


def plurality_election(ballots):
    """Return the most frequently cast ballot, the noiseless Powerset outcome.

    Ties go to the smallest ballot in lexicographic order.
    """
    histogram = PowersetHistogram.from_ballots(ballots)
    return list(histogram.outcomes[int(np.argmax(histogram.counts))])


def _consensus(factory, index, top, cfg):
    """Run the noisy consensus check of candidate ``index``."""
    if not cfg.gated:
        return True
    noise = 0.0
    if cfg.sigma_t > 0:
        noise = factory.stream(index, PURPOSE_THRESHOLD).normal(0.0, cfg.sigma_t)
    return top + noise > cfg.threshold_t


def _label_votes(factory, histogram, cfg):
    """Run the gated two-bin noisy argmax of every candidate.

    Returns:
        tuple: ``(released, passed)`` lists.
    """
    released, passed = [], []
    # Each bin gets N(0, σ_G²/2) so the difference of the bins has variance σ_G²
    scale = cfg.sigma_g / math.sqrt(2.0)
    for index in range(histogram.k):
        negative, positive = histogram.label_counts(index)
        if not _consensus(factory, index, max(negative, positive), cfg):
            released.append(None)
            passed.append(False)
            continue
        if scale > 0:
            noise = factory.stream(index, PURPOSE_RELEASE).normal(0.0, scale, size=2)
            negative, positive = negative + noise[0], positive + noise[1]
        # Exact ties release absence
        released.append(1 if positive > negative else 0)
        passed.append(True)
    return released, passed


def _threshold_cost(cfg, checks, grid):
    if not cfg.gated or checks == 0:
        return RdpCurve.zero(grid)
    if cfg.sigma_t == 0:
        return RdpCurve.infinite(grid)
    return gaussian_threshold_rdp(cfg.sigma_t, grid) * checks


def _price(counts, noise_sigma, slope, grid, cfg, zero_bins=0):
    """Price one noisy argmax, data-independently if ``cfg`` says so.

    Returns:
        tuple: ``(curve, report, used)``.
    """
    curve, report, dependent = data_dependent_curve(
        counts, noise_sigma, slope, grid, zero_bins=zero_bins
    )
    if not cfg.data_dependent:
        return RdpCurve(grid, grid.as_array() * slope), report, False
    return curve, report, bool(np.any(dependent))


def _per_label_costs(histogram, passed, cfg, slope, grid):
    """Price every released candidate on its own, data-dependently where
    that is cheaper.

    Returns:
        tuple: ``(curves, log_qs, used)`` lists over all candidates; the
        curves of candidates that were not released are `None`.
    """
    curves, log_qs, used = [], [], []
    for index in range(histogram.k):
        curve, report, dependent = _price(
            histogram.label_counts(index),
            cfg.sigma_g / math.sqrt(2.0),
            slope,
            grid,
            cfg,
        )
        log_qs.append(report.log_q)
        used.append(dependent and passed[index])
        curves.append(curve if passed[index] else None)
    return curves, log_qs, used


def _finish(released, passed, release_cost, cfg, checks, grid, gaps, log_qs, used):
    answered = any(passed)
    cost = _threshold_cost(cfg, checks, grid)
    if answered:
        cost = cost + release_cost
    diagnostics = {
        "gap": [float(gap) for gap in gaps],
        "q": [math.exp(log_q) for log_q in log_qs],
        "passed": list(passed),
        "data_dependent": any(used),
        "private": cfg.private,
    }
    return QueryOutcome(answered, released, cost, diagnostics)


def _check(ballots, cfg, kind):
    if cfg.kind != kind:
        raise InvalidParameterError(
            "A {} policy cannot run {} voting".format(cfg.kind, kind)
        )
    if ballots.n == 0:
        raise EmptyBallotsError("Cannot aggregate an empty ballot set")


def _label_histogram(ballots, cfg):
    if cfg.kind == TAU:
        return LabelHistogram.from_ballots(clip(ballots, cfg.tau, cfg.clip_norm))
    return LabelHistogram.from_ballots(ballots)


def _label_release_cost(histogram, passed, cfg, grid):
    """Price the released candidates of a Binary or τ query.

    Binary composes the per-candidate curves. τ voting takes the cheaper of
    that composition and a single vector release of the clipped histogram;
    releasing only some candidates of the vector is post-processing, so the
    vector price bounds any subset.

    Returns:
        tuple: ``(cost, log_qs, used)``.
    """
    if not cfg.private:
        return (
            RdpCurve.infinite(grid),
            [math.nan] * histogram.k,
            [False] * histogram.k,
        )
    if cfg.kind == BINARY:
        # Each candidate is a GNMax release with Δ₂ = √2
        slope = 1.0 / cfg.sigma_g ** 2
    else:
        # A single clipped candidate moves by at most min(1, τ) per bin
        slope = min(1.0, cfg.tau) ** 2 / cfg.sigma_g ** 2
    curves, log_qs, used = _per_label_costs(histogram, passed, cfg, slope, grid)
    cost = compose([curve for curve in curves if curve is not None], grid)
    if cfg.kind == TAU:
        delta2 = clipped_sensitivity(cfg.tau, cfg.clip_norm, histogram.k)
        vector_cost = gaussian_rdp(delta2, cfg.sigma_g, grid)
        used = [flag and bool(np.any(cost.eps < vector_cost.eps)) for flag in used]
        cost = vector_cost.minimum(cost)
    return cost, log_qs, used


def binary_aggregate(ballots, cfg, factory, grid=None):
    """Aggregate one query with Binary voting.

    For every candidate: run the consensus check if enabled, add
    N(0, σ_G²/2) to both the negative and the positive count and release 1
    iff the noisy positive count is larger.

    Args:
        ballots (BallotMatrix): The ballots of the query.
        cfg (MechanismConfig): A `BINARY` policy.
        factory (RngFactory): The noise streams of the query.
        grid (OrderGrid, optional): The orders to price on.

    Returns:
        QueryOutcome: The released bits and their cost.
    """
    _check(ballots, cfg, BINARY)
    grid = grid or OrderGrid.default()
    histogram = _label_histogram(ballots, cfg)
    released, passed = _label_votes(factory, histogram, cfg)
    release_cost, log_qs, used = _label_release_cost(histogram, passed, cfg, grid)
    return _finish(
        released, passed, release_cost, cfg, histogram.k, grid,
        histogram.gaps(), log_qs, used,
    )


def tau_aggregate(ballots, cfg, factory, grid=None):
    """Aggregate one query with τ voting.

    The ballots are clipped to the τ ball first; the negative count of a
    candidate is n minus its clipped positive mass. The release is priced
    once for the whole vector with Δ₂ = √2·τ (ε(λ) = λτ²/σ_G² for ℓ2), or
    per candidate when that is cheaper.

    Args:
        ballots (BallotMatrix): The ballots of the query.
        cfg (MechanismConfig): A `TAU` policy.
        factory (RngFactory): The noise streams of the query.
        grid (OrderGrid, optional): The orders to price on.

    Returns:
        QueryOutcome: The released bits and their cost.
    """
    _check(ballots, cfg, TAU)
    grid = grid or OrderGrid.default()
    if cfg.tau >= math.sqrt(ballots.k):
        _LOG.warning(
            "tau=%g >= sqrt(k) for k=%d: clipping is the identity and this is "
            "Binary voting",
            cfg.tau,
            ballots.k,
        )
    histogram = _label_histogram(ballots, cfg)
    released, passed = _label_votes(factory, histogram, cfg)
    release_cost, log_qs, used = _label_release_cost(histogram, passed, cfg, grid)
    return _finish(
        released, passed, release_cost, cfg, histogram.k, grid,
        histogram.gaps(), log_qs, used,
    )


def price_labels(ballots, cfg, outcome, labels, grid=None):
    """Return the cost of publishing only some candidates of an outcome.

    ``outcome`` must come from aggregating ``ballots`` under ``cfg``. The
    consensus check of every candidate in ``labels`` is charged, and the
    candidates in ``labels`` that passed it are priced as their own release
    from the same (clipped) histogram.

    Args:
        ballots (BallotMatrix): The ballots of the query.
        cfg (MechanismConfig): A `BINARY` or `TAU` policy.
        outcome (QueryOutcome): The full outcome of the query.
        labels (Iterable(int)): The candidates that are published.
        grid (OrderGrid, optional): The orders to price on.

    Returns:
        RdpCurve: The cost.

    Raises:
        InvalidParameterError: for a Powerset policy.
    """
    if cfg.kind not in (BINARY, TAU):
        raise InvalidParameterError("Only per-label releases can be split")
    grid = grid or OrderGrid.default()
    labels = set(labels)
    passed = [
        flag and index in labels
        for index, flag in enumerate(outcome.diagnostics["passed"])
    ]
    cost = _threshold_cost(cfg, len(labels), grid)
    if not any(passed):
        return cost
    release_cost, _, _ = _label_release_cost(
        _label_histogram(ballots, cfg), passed, cfg, grid
    )
    return cost + release_cost


def powerset_aggregate(ballots, cfg, factory, grid=None):
    """Aggregate one query with Powerset voting.

    Builds the histogram of the ballots actually cast, adds N(0, σ_G²) to
    every bin and releases the ballot with the largest noisy count. Outcomes
    nobody voted for can never be released. The release costs one GNMax
    query (Δ₂ = √2), or less when the data-dependent bound is tighter; the
    bound accounts for the uncast outcomes as empty bins.

    With a τ in ``cfg`` every ballot keeps at most ⌊τ⌋ of its positive
    candidates before the histogram is built. A voter still moves one vote
    between two bins, so the price does not change.

    Args:
        ballots (BallotMatrix): The ballots of the query.
        cfg (MechanismConfig): A `POWERSET` policy.
        factory (RngFactory): The noise streams of the query.
        grid (OrderGrid, optional): The orders to price on.

    Returns:
        QueryOutcome: The released vector and its cost.
    """
    _check(ballots, cfg, POWERSET)
    grid = grid or OrderGrid.default()
    if cfg.tau is not None:
        ballots = truncate(ballots, int(cfg.tau))
    histogram = PowersetHistogram.from_ballots(ballots)
    counts = histogram.counts
    passed = _consensus(factory, 0, float(np.max(counts)), cfg)
    released = [None] * ballots.k
    if passed:
        noisy = counts
        if cfg.sigma_g > 0:
            noise = factory.stream(0, PURPOSE_RELEASE).normal(
                0.0, cfg.sigma_g, size=counts.size
            )
            noisy = counts + noise
        released = list(histogram.outcomes[int(np.argmax(noisy))])
    if not cfg.private:
        release_cost, log_q, used = RdpCurve.infinite(grid), math.nan, False
    else:
        release_cost, report, used = _price(
            counts,
            cfg.sigma_g,
            1.0 / cfg.sigma_g ** 2,
            grid,
            cfg,
            zero_bins=histogram.uncast,
        )
        log_q = report.log_q
    ordered = np.sort(counts)[::-1]
    gap = ordered[0] - (ordered[1] if ordered.size > 1 else 0.0)
    return _finish(
        released,
        [passed],
        release_cost,
        cfg,
        1,
        grid,
        [gap],
        [log_q],
        [used and passed],
    )


_AGGREGATORS = {
    BINARY: binary_aggregate,
    TAU: tau_aggregate,
    POWERSET: powerset_aggregate,
}


def aggregate(ballots, cfg, factory, grid=None):
    """Aggregate one query with the mechanism ``cfg`` names.

    Args:
        ballots (BallotMatrix): The ballots of the query.
        cfg (MechanismConfig): The policy.
        factory (RngFactory or int): The noise streams of the query, or a
            seed to derive them from for query 0.
        grid (OrderGrid, optional): The orders to price on.

    Returns:
        QueryOutcome: The outcome.
    """
    if not isinstance(factory, RngFactory):
        factory = RngFactory(factory)
    outcome = _AGGREGATORS[cfg.kind](ballots, cfg, factory, grid)
    _LOG.debug(
        "Query %d: %s released %s", factory.query_id, cfg.kind, outcome.released
    )
    return outcome
