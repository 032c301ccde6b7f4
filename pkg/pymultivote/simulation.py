"""Synthetic vote streams and budgeted labelling experiments.

Teachers are simulated as independent Bernoulli voters: teacher j approves
of candidate i with probability p_i. A stream of queries is answered by one
mechanism until the privacy budget runs out, and the harness reports how
many queries were answered, what they cost and how well the released
labels match the truth.

Example:

    >>> from pymultivote.accountant import DpGuarantee
    >>> from pymultivote.mechanisms import MechanismConfig, POWERSET
    >>> votes = generate_votes(SimulationConfig(50, 5, 100, probability=0.5))
    >>> result = run_experiment(
    ...     votes, MechanismConfig(POWERSET, 7.0), DpGuarantee(20, 1e-6))
    >>> result.answered <= len(votes)
    True
"""


import logging
import math
from collections import OrderedDict, namedtuple

import numpy as np
from scipy import stats

from .accountant import BudgetLedger, DpGuarantee, OrderGrid
from .analysis import approx_bound, powerset_gap_estimate
from .ballots import L2, BallotMatrix, LabelHistogram, PowersetHistogram
from .exceptions import InvalidParameterError
from .mechanisms import (
    BINARY,
    KINDS,
    POWERSET,
    TAU,
    MechanismConfig,
    QueryOutcome,
    aggregate,
    price_labels,
    refused_record,
)
from .metrics import metric_report
from .utils import PURPOSE_BALLOTS, RngFactory, derive_rng

_LOG = logging.getLogger(__name__)


class SimulationConfig:

    """The shape and randomness of a synthetic vote stream."""

    # pylint: disable=too-many-arguments
    def __init__(
        self, teachers, labels, queries, probability=0.5, block=0, prevalence=None,
        seed=0,
    ):
        """
        Args:
            teachers (int): The number of teachers t.
            labels (int): The number of labels k.
            queries (int): The number of queries m.
            probability (float or list(float)): p_i, the chance a teacher
                votes for label i; one value for every label or one per
                label.
            block (int): With d > 1 labels 1..d-1 copy label 0 in every
                ballot (perfect dependence). 0 or 1 means independent labels.
            prevalence (float or list(float), optional): When given, every
                query first draws a true label z_i ~ Bernoulli(prevalence_i)
                and teachers vote for label i with probability p_i if z_i is
                1 and 1 - p_i otherwise, so p_i is the teachers' accuracy.
            seed (int): The master seed.

        Raises:
            InvalidParameterError: for counts below 1, probabilities outside
                [0, 1] or a block larger than k.
        """
        if teachers < 1 or labels < 1 or queries < 0:
            raise InvalidParameterError("Need teachers >= 1, labels >= 1, queries >= 0")
        if not 0 <= block <= labels:
            raise InvalidParameterError(
                "Block size {} must lie in [0, {}]".format(block, labels)
            )
        #: `int`: Teachers t
        self.teachers = int(teachers)
        #: `int`: Labels k
        self.labels = int(labels)
        #: `int`: Queries m
        self.queries = int(queries)
        #: `numpy.ndarray`: Per label vote probabilities
        self.probability = self._per_label(probability, "probability")
        #: `int`: Size of the block of copied labels
        self.block = int(block)
        #: `numpy.ndarray`: Per label prevalence of the latent truth, or `None`
        self.prevalence = (
            None if prevalence is None else self._per_label(prevalence, "prevalence")
        )
        #: `int`: The master seed
        self.seed = int(seed)

    def _per_label(self, value, name):
        array = np.broadcast_to(np.asarray(value, dtype=np.float64), (self.labels,))
        if not np.all((array >= 0) & (array <= 1)):
            raise InvalidParameterError("Every {} must lie in [0, 1]".format(name))
        return array.copy()

    def replace(self, **changes):
        """Return a copy with some fields changed."""
        values = self.to_dict()
        values.update(changes)
        return SimulationConfig(**values)

    def to_dict(self):
        """Return the configuration as a JSON-compatible dict."""
        return {
            "teachers": self.teachers,
            "labels": self.labels,
            "queries": self.queries,
            "probability": self.probability.tolist(),
            "block": self.block,
            "prevalence": None if self.prevalence is None else self.prevalence.tolist(),
            "seed": self.seed,
        }

    def __repr__(self):
        return "{}(t={}, k={}, m={}, seed={})".format(
            self.__class__.__name__,
            self.teachers,
            self.labels,
            self.queries,
            self.seed,
        )


class VoteStream:

    """An ordered stream of queries, each a `BallotMatrix`, with optional
    ground truth.

    Iterating yields ``(query_id, ballots)`` pairs in stream order. The
    noise of query number i of the stream is derived from ``(seed, i)``.
    """

    def __init__(self, ballots, truth=None, query_ids=None, seed=0):
        """
        Args:
            ballots (list(BallotMatrix)): One matrix per query.
            truth (array_like, optional): m×k true bits.
            query_ids (list, optional): Ids of the queries, default 0..m-1.
            seed (int): The master seed of the mechanism noise.
        """
        self.ballots = list(ballots)
        self.truth = None if truth is None else np.asarray(truth, dtype=np.int64)
        self.query_ids = (
            list(range(len(self.ballots))) if query_ids is None else list(query_ids)
        )
        self.seed = int(seed)
        if len({ballots.k for ballots in self.ballots}) > 1:
            raise InvalidParameterError("Queries of one stream must share k")

    @property
    def k(self):
        """int: The number of labels, `None` for an empty stream."""
        return self.ballots[0].k if self.ballots else None

    def __len__(self):
        return len(self.ballots)

    def __iter__(self):
        return iter(zip(self.query_ids, self.ballots))

    def __getitem__(self, index):
        return self.ballots[index]

    def __repr__(self):
        return "{}(m={}, k={})".format(self.__class__.__name__, len(self), self.k)


def generate_votes(cfg):
    """Draw the synthetic vote stream ``cfg`` describes.

    Every query draws its ballots from its own generator, derived from the
    master seed and the query number. The truth of a label is the majority
    bit of its generating distribution (1 iff p_i > 0.5), or the latent
    truth when ``cfg.prevalence`` is set.

    Args:
        cfg (SimulationConfig): The stream parameters.

    Returns:
        VoteStream: The m queries and their m×k truth.
    """
    ballots, truth = [], []
    for query_id in range(cfg.queries):
        rng = derive_rng(cfg.seed, query_id, 0, PURPOSE_BALLOTS)
        if cfg.prevalence is None:
            latent = cfg.probability > 0.5
            probability = cfg.probability
        else:
            latent = rng.random(cfg.labels) < cfg.prevalence
            probability = np.where(latent, cfg.probability, 1.0 - cfg.probability)
        bits = (rng.random((cfg.teachers, cfg.labels)) < probability).astype(np.uint8)
        latent = latent.astype(np.int64)
        if cfg.block > 1:
            bits[:, 1 : cfg.block] = bits[:, [0]]
            latent[1 : cfg.block] = latent[0]
        ballots.append(BallotMatrix(bits))
        truth.append(latent)
    _LOG.debug("Generated %d queries with seed %d", cfg.queries, cfg.seed)
    return VoteStream(
        ballots,
        truth=np.array(truth).reshape(cfg.queries, cfg.labels),
        seed=cfg.seed,
    )


class ExperimentResult:

    """The outcome of a budgeted labelling run.

    Attributes:
        config (dict): The mechanism policy and budget.
        answered (int): Queries with at least one released label.
        processed (int): Queries charged before the budget ran out.
        outcomes (list): ``(query_id, QueryOutcome)`` of every processed
            query.
        records (list(dict)): One JSON Lines record per query of the
            stream; queries after the budget ran out are unanswered.
        guarantee (DpGuarantee): The (ε, δ) spent.
        metrics (dict): The `pymultivote.metrics.metric_report` of the
            processed queries, `None` without ground truth.
        ledger (BudgetLedger): The final ledger.
    """

    # pylint: disable=too-many-arguments
    def __init__(self, config, answered, outcomes, records, guarantee, metrics, ledger):
        self.config = config
        self.answered = answered
        self.outcomes = outcomes
        self.records = records
        self.guarantee = guarantee
        self.metrics = metrics
        self.ledger = ledger

    @property
    def processed(self):
        """int: The number of queries charged."""
        return len(self.outcomes)

    def to_dict(self):
        """Return ``{config, answered, eps_final, metrics}``."""
        return {
            "config": self.config,
            "answered": self.answered,
            "eps_final": self.guarantee.epsilon,
            "metrics": self.metrics,
        }

    def __repr__(self):
        return "{}(answered={}, eps={:g})".format(
            self.__class__.__name__, self.answered, self.guarantee.epsilon
        )


class _Run:

    """Charges query outcomes to a ledger in stream order.

    After the first refused charge the run stops: every later query gets an
    unanswered record and is neither priced nor charged.
    """

    def __init__(self, votes, cfg, budget, grid, ledger=None):
        self.votes = votes
        self.cfg = cfg
        self.ledger = ledger or BudgetLedger(budget, grid=grid)
        self.outcomes = []
        self.records = []
        self.answered = 0
        self.stopped = False

    def eps_so_far(self):
        """Return the ε of the spend so far, 0 before anything is spent."""
        if not self.cfg.private:
            return math.inf
        if not np.any(self.ledger.accumulated.eps > 0):
            return 0.0
        return self.ledger.spent().epsilon

    def refuse(self, query_id):
        """Record ``query_id`` as refused and stop the run."""
        self.stopped = True
        self.records.append(refused_record(query_id, self.votes.k, self.eps_so_far()))

    def commit(self, query_id, outcome):
        """Charge ``outcome``; return `False` if it was refused."""
        if self.stopped or (self.cfg.private and self.ledger.charge(outcome.cost)):
            self.refuse(query_id)
            return False
        self.outcomes.append((query_id, outcome))
        self.records.append(outcome.to_record(query_id, self.eps_so_far()))
        self.answered += int(outcome.answered)
        return True

    def result(self, extra=None):
        budget = self.ledger.budget
        if self.cfg.private:
            guarantee = self.ledger.spent()
        else:
            guarantee = DpGuarantee(math.inf, budget.delta)
        metrics = None
        if self.votes.truth is not None and len(self.votes):
            k = self.votes.k
            predictions = [outcome.released for _, outcome in self.outcomes]
            metrics = metric_report(
                np.array(predictions, dtype=object).reshape(len(predictions), k),
                self.votes.truth[: len(predictions)],
                self.answered / len(self.votes),
            )
        config = {"mechanism": self.cfg.to_dict(), "budget": budget.to_dict()}
        config.update(extra or {})
        _LOG.info(
            "Answered %d of %d queries for epsilon=%g",
            self.answered,
            len(self.votes),
            guarantee.epsilon,
        )
        return ExperimentResult(
            config,
            self.answered,
            self.outcomes,
            self.records,
            guarantee,
            metrics,
            self.ledger,
        )


def _outcomes(votes, cfg, grid):
    for position, (query_id, ballots) in enumerate(votes):
        yield query_id, aggregate(ballots, cfg, RngFactory(votes.seed, position), grid)


def run_experiment(votes, cfg, budget, grid=None, ledger=None):
    """Answer the queries of ``votes`` in order until the budget runs out.

    Every query is priced before it is charged; the first query whose cost
    does not fit ends the run and is not released. That query and all later
    ones still get an unanswered record. Oracle mode runs are not charged
    and report an infinite ε.

    Args:
        votes (VoteStream): The queries.
        cfg (MechanismConfig): The policy.
        budget (DpGuarantee): The (ε, δ) budget. Ignored when ``ledger`` is
            given.
        grid (OrderGrid, optional): The orders to account on.
        ledger (BudgetLedger, optional): A ledger to keep charging, such as
            one resumed from disk.

    Returns:
        ExperimentResult: The run.
    """
    if ledger is not None:
        grid, budget = ledger.grid, ledger.budget
    grid = grid or OrderGrid.default()
    if not cfg.private:
        _LOG.warning("Oracle mode run: releases are not differentially private")
    run = _Run(votes, cfg, budget, grid, ledger)
    for position, (query_id, ballots) in enumerate(votes):
        if run.stopped:
            run.refuse(query_id)
            continue
        factory = RngFactory(votes.seed, position)
        run.commit(query_id, aggregate(ballots, cfg, factory, grid))
    return run.result()


def epsilon_sweep(votes, cfg, epsilons, delta, grid=None):
    """Count the queries answered at each of several budgets.

    The noise of a query does not depend on the budget, so every budget
    replays the same outcomes.

    Args:
        votes (VoteStream): The queries.
        cfg (MechanismConfig): A private policy.
        epsilons (Iterable(float)): The budget ε values.
        delta (float): The budget δ.
        grid (OrderGrid, optional): The orders to account on.

    Returns:
        list(tuple): ``(epsilon, answered)`` rows in the order of
        ``epsilons``.
    """
    grid = grid or OrderGrid.default()
    if not cfg.private:
        raise InvalidParameterError("A budget sweep needs a private policy")
    source = _outcomes(votes, cfg, grid)
    seen = []
    rows = []
    for epsilon in epsilons:
        run = _Run(votes, cfg, DpGuarantee(epsilon, delta), grid)
        position = 0
        while True:
            if position == len(seen):
                upcoming = next(source, None)
                if upcoming is None:
                    break
                seen.append(upcoming)
            if not run.commit(*seen[position]):
                break
            position += 1
        rows.append((epsilon, run.answered))
    return rows


SweepRow = namedtuple("SweepRow", ["policy", "value", "answered", "eps", "metrics"])
SweepRow.__doc__ = """One run of a parameter sweep.

Attributes:
    policy (str): The name of the policy.
    value (float): The swept parameter, σ_G or τ.
    answered (int): Queries answered.
    eps (float): The ε spent.
    metrics (dict): The macro averaged metrics, `None` without ground
        truth.
"""

#: Data-dependent Binary voting
BINARY_DD = "binary"
#: Binary voting priced data-independently
BINARY_DI = "binary-di"
#: τ voting with data-dependent per-label prices where cheaper
TAU_DD = "tau"
#: τ voting priced as one clipped ℓ2 vector release
L2_DI = "l2-di"
#: Powerset voting
POWERSET_DD = "powerset"


def comparison_policies(sigma_g, tau=None, clip_norm=L2):
    """Return the policies a noise sweep compares, by name.

    Binary and Powerset voting are always included, once with and once
    without data-dependent pricing for Binary. With a τ, τ voting and its
    purely data-independent vector pricing (`L2_DI`) are added.

    >>> list(comparison_policies(7.0, tau=1.8))
    ['binary', 'binary-di', 'powerset', 'tau', 'l2-di']
    """
    policies = OrderedDict()
    policies[BINARY_DD] = MechanismConfig(BINARY, sigma_g)
    policies[BINARY_DI] = MechanismConfig(BINARY, sigma_g, data_dependent=False)
    policies[POWERSET_DD] = MechanismConfig(POWERSET, sigma_g)
    if tau is not None:
        policies[TAU_DD] = MechanismConfig(TAU, sigma_g, tau=tau, clip_norm=clip_norm)
        policies[L2_DI] = MechanismConfig(
            TAU, sigma_g, tau=tau, clip_norm=clip_norm, data_dependent=False
        )
    return policies


def _sweep_row(name, value, result):
    metrics = None if result.metrics is None else result.metrics["macro"]
    return SweepRow(
        name, float(value), result.answered, result.guarantee.epsilon, metrics
    )


def sigma_sweep(votes, policies, sigmas, budget, grid=None):
    """Count the queries each policy answers at several noise scales.

    Unlike the budget in `epsilon_sweep`, σ_G changes every release, so
    every pair of policy and σ_G is a run of its own.

    Args:
        votes (VoteStream): The queries.
        policies (dict): Maps names to `MechanismConfig`; their σ_G is
            replaced by each of ``sigmas``.
        sigmas (Iterable(float)): The positive noise scales.
        budget (DpGuarantee): The budget of every run.
        grid (OrderGrid, optional): The orders to account on.

    Returns:
        list(SweepRow): Grouped by policy, in the order of ``sigmas``.
    """
    sigmas = [float(sigma) for sigma in sigmas]
    if not all(sigma > 0 for sigma in sigmas):
        raise InvalidParameterError("A noise sweep needs positive noise scales")
    rows = []
    for name, cfg in policies.items():
        for sigma in sigmas:
            result = run_experiment(votes, cfg.replace(sigma_g=sigma), budget, grid)
            rows.append(_sweep_row(name, sigma, result))
    return rows


def tau_sweep(votes, cfg, taus, budget, grid=None):
    """Count the answers and measure the utility of several τ.

    For τ voting τ is the clipping bound; for Powerset voting it caps the
    positives of every ballot. Small τ changes the votes themselves, which
    shows in the metrics before it shows in the answers.

    Args:
        votes (VoteStream): The queries.
        cfg (MechanismConfig): A `TAU` or `POWERSET` policy.
        taus (Iterable(float)): The τ values.
        budget (DpGuarantee): The budget of every run.
        grid (OrderGrid, optional): The orders to account on.

    Returns:
        list(SweepRow): One row per τ, named after the mechanism.

    Raises:
        InvalidParameterError: for a Binary policy or an invalid τ.
    """
    if cfg.kind not in (TAU, POWERSET):
        raise InvalidParameterError("Only tau and Powerset voting take a tau")
    rows = []
    for tau in taus:
        result = run_experiment(votes, cfg.replace(tau=tau), budget, grid)
        rows.append(_sweep_row(cfg.kind, tau, result))
    return rows


def answer_with_dependencies(votes, cfg, budget, pivot, grid=None):
    """Answer queries by releasing a pivot label first.

    If the pivot is released as 0, every other label is set to 0 without
    further charge; if it is released as 1 the remaining labels are
    released as usual; if it is ⊥ the query is unanswered. Accounting is
    otherwise that of `run_experiment`.

    Every query is aggregated once over the full ballots, so τ voting clips
    each ballot once and a pivot released as 1 gives exactly the outcome and
    price of `run_experiment`. Otherwise only the pivot is published and
    priced.

    Args:
        votes (VoteStream): The queries.
        cfg (MechanismConfig): A `BINARY` or `TAU` policy.
        budget (DpGuarantee): The (ε, δ) budget.
        pivot (int): The index of the pivot label.
        grid (OrderGrid, optional): The orders to account on.

    Returns:
        ExperimentResult: The run.

    Raises:
        InvalidParameterError: for a Powerset policy or a pivot out of
            range.
    """
    if cfg.kind not in (BINARY, TAU):
        raise InvalidParameterError("Label dependencies need per-label releases")
    k = votes.k or 0
    if not 0 <= pivot < max(k, 1):
        raise InvalidParameterError("Pivot {} out of range for k={}".format(pivot, k))
    grid = grid or OrderGrid.default()
    run = _Run(votes, cfg, budget, grid)
    skipped = 0
    for position, (query_id, ballots) in enumerate(votes):
        if run.stopped:
            run.refuse(query_id)
            continue
        full = aggregate(ballots, cfg, RngFactory(votes.seed, position), grid)
        bit = full.released[pivot]
        if bit == 1:
            outcome = full
        else:
            released = [0] * k if bit == 0 else [None] * k
            diagnostics = dict(full.diagnostics)
            diagnostics["passed"] = [
                index == pivot and bit == 0 for index in range(k)
            ]
            outcome = QueryOutcome(
                bit == 0,
                released,
                price_labels(ballots, cfg, full, [pivot], grid),
                diagnostics,
            )
        if run.commit(query_id, outcome):
            skipped += int(bit == 0)
    _LOG.info("Skipped the other labels on %d queries", skipped)
    return run.result({"pivot": pivot})


GapCdf = namedtuple("GapCdf", ["gaps", "fractions"])
GapCdf.__doc__ = """An empirical CDF of vote gaps.

Attributes:
    gaps (numpy.ndarray): The sorted gaps.
    fractions (numpy.ndarray): The fraction of gaps at most each entry.
"""


def gap_cdf(votes, kind):
    """Return the empirical CDF of the noiseless gaps of a stream.

    For Binary (and τ) voting every label of every query contributes
    |V¹ - V⁰|; for Powerset every query contributes the lead of its most
    cast ballot over the runner-up (over nothing when only one ballot was
    cast).

    Args:
        votes (Iterable): `BallotMatrix` per query, or a `VoteStream`.
        kind (str): The mechanism.

    Returns:
        GapCdf: The CDF.
    """
    if kind not in KINDS:
        raise InvalidParameterError("Unknown mechanism %r" % kind)
    if isinstance(votes, VoteStream):
        votes = votes.ballots
    gaps = []
    for ballots in votes:
        if kind == POWERSET:
            counts = np.sort(PowersetHistogram.from_ballots(ballots).counts)[::-1]
            gaps.append(counts[0] - (counts[1] if counts.size > 1 else 0.0))
        else:
            gaps.extend(LabelHistogram.from_ballots(ballots).gaps())
    gaps = np.sort(np.asarray(gaps, dtype=np.float64))
    fractions = np.arange(1, gaps.size + 1) / max(gaps.size, 1)
    return GapCdf(gaps, fractions)


POSITIVE = "positive"
NEGATIVE = "negative"


class DependencyMatrix:

    """Empirical conditional label frequencies.

    In positive mode entry (i, j) is P(label j = 1 | label i = 1); in
    negative mode P(label j = 0 | label i = 0). Entries whose condition
    never occurs are missing (NaN).
    """

    def __init__(self, values, mode):
        #: `numpy.ndarray`: The k×k frequencies, NaN where missing
        self.values = np.asarray(values, dtype=np.float64)
        #: `str`: `POSITIVE` or `NEGATIVE`
        self.mode = mode

    @property
    def missing(self):
        """numpy.ndarray: Mask of the undefined entries."""
        return np.isnan(self.values)

    def to_rows(self):
        """Return the entries as nested lists with `None` where missing."""
        return [
            [None if math.isnan(value) else float(value) for value in row]
            for row in self.values
        ]

    def __repr__(self):
        return "{}(k={}, mode={!r})".format(
            self.__class__.__name__, self.values.shape[0], self.mode
        )


def dependency_matrix(labels, mode=POSITIVE):
    """Compute the dependency matrix of an m×k table of label bits.

    >>> dependency_matrix([[1, 1], [0, 1]]).to_rows()
    [[1.0, 1.0], [0.5, 1.0]]

    Raises:
        InvalidParameterError: for an empty table or an unknown mode.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.shape[0] < 1:
        raise InvalidParameterError("Need an m x k table with m >= 1")
    if mode not in (POSITIVE, NEGATIVE):
        raise InvalidParameterError("Unknown dependency mode %r" % mode)
    events = (labels == 1) if mode == POSITIVE else (labels == 0)
    events = events.astype(np.float64)
    joint = events.T @ events
    conditions = events.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = joint / conditions[:, np.newaxis]
    values[conditions == 0, :] = np.nan
    return DependencyMatrix(values, mode)


Predictors = namedtuple("Predictors", ["binary", "powerset"])
Predictors.__doc__ = """Expected per-query privacy loss of the two mechanisms.

Attributes:
    binary (float): E[ε] of Binary voting over k labels.
    powerset (float): The Powerset estimate.
"""


def _gap_epsilon(gap, sigma, floor):
    return approx_bound(max(gap, floor), sigma, warn=False).epsilon


def expected_eps_predictors(p, teachers, labels, sigma, drop_low_gaps=False):
    """Predict the per-query privacy loss of Binary and Powerset voting
    from the vote probability alone.

    Binary: k times the expectation, over the binomial distribution of the
    positive count, of the closed-form bound at the gap |2c - t|. The
    closed form only holds for large gaps, so gaps below ⌈σ⌉ are priced as
    ⌈σ⌉ by default; with ``drop_low_gaps`` they are left out of the sum
    instead, which is the plain truncated sum and ignores their loss.
    Powerset: the closed-form bound at the gap the balls-and-bins estimate
    gives for the modal ballot, whose probability is max(p, 1 - p)^k, with
    the same floor. A single label has two outcomes, so for k = 1 both
    mechanisms are the same mechanism and share the Binary prediction.

    >>> round(expected_eps_predictors(0.99, 50, 11, 7.0).powerset, 4)
    0.048

    Args:
        p (float): The vote probability, in (0, 1).
        teachers (int): t.
        labels (int): k.
        sigma (float): The noise scale.
        drop_low_gaps (bool): Leave gaps below ⌈σ⌉ out of the Binary sum.

    Returns:
        Predictors: The two estimates.

    Raises:
        InvalidParameterError: for ``p`` outside (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must lie in (0, 1), got %r" % p)
    floor = float(math.ceil(sigma))
    positives = np.arange(teachers + 1)
    weights = stats.binom.pmf(positives, teachers, p)
    gaps = np.abs(2 * positives - teachers)
    if drop_low_gaps:
        weights = np.where(gaps >= floor, weights, 0.0)
    per_label = sum(
        weight * _gap_epsilon(gap, sigma, floor)
        for gap, weight in zip(gaps, weights)
        if weight > 0
    )
    binary = labels * float(per_label)
    if labels == 1:
        return Predictors(binary, binary)
    _, gap = powerset_gap_estimate(teachers, max(p, 1.0 - p) ** labels)
    return Predictors(binary, _gap_epsilon(gap, sigma, floor))


Preset = namedtuple("Preset", ["simulation", "sigma_g", "budget"])
Preset.__doc__ = """A reference experiment comparing Binary and Powerset
voting.

Attributes:
    simulation (SimulationConfig): The stream.
    sigma_g (float): σ_G of both mechanisms.
    budget (DpGuarantee): The budget of both runs.
"""

#: Random votes: Powerset prices a query as a single release and answers more
REGIME_A = Preset(
    SimulationConfig(50, 11, 1000, probability=0.5), 7.0, DpGuarantee(20.0, 1e-6)
)

#: Unanimous all-zero votes: every Binary label has the largest possible gap
REGIME_B = Preset(
    SimulationConfig(50, 11, 2000, probability=0.0), 7.0, DpGuarantee(2.0, 1e-6)
)

PRESETS = {"regime-a": REGIME_A, "regime-b": REGIME_B}
