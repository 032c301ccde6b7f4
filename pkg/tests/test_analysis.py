"""Tests for the analysis module."""


import logging
import math

import numpy as np
import pytest
from scipy import special

from pymultivote.accountant import OrderGrid, to_dp
from pymultivote.analysis import (
    BLANK,
    REPLACE,
    BoundFailure,
    DataDependentParams,
    approx_bound,
    coordinate_independent,
    data_dependent_curve,
    empirical_flip_rate,
    gap_bound_q,
    is_data_independent_always_optimal,
    positive_counts,
    powerset_gap_estimate,
    sensitivity_oracle,
    stacked_histogram,
    stirling_binom_upper,
    theorem_bound,
)
from pymultivote.ballots import BallotMatrix
from pymultivote.exceptions import DomainTooLargeError, InvalidParameterError

SIGMA_G = 7.0
# Binary voting adds N(0, σ_G²/2) to each of the two bins of a label
BIN_SIGMA = SIGMA_G / math.sqrt(2.0)
SLOPE = 1.0 / SIGMA_G ** 2
DELTA = 1e-5


# The gap bound


def test_gap_bound_q():
    assert gap_bound_q([5, 5], 1.0).q == pytest.approx(0.5)
    report = gap_bound_q([2, 9, 4], 1.0)
    assert report.plurality == 1
    assert report.q_tilde == 5.0
    assert report.counts.tolist() == [9.0, 4.0, 2.0]
    assert 0 < report.q < 0.01


def test_gap_bound_q_single_bin_is_certain():
    report = gap_bound_q([7], 1.0)
    assert report.log_q == -math.inf
    assert report.q == 0.0


def test_gap_bound_q_zero_bins_add_mass():
    without = gap_bound_q([10, 3], 2.0)
    with_zero = gap_bound_q([10, 3], 2.0, zero_bins=1000)
    assert with_zero.log_q > without.log_q
    assert with_zero.counts.tolist() == [10.0, 3.0, 0.0]


def test_gap_bound_q_keeps_tiny_bounds_in_log_space():
    report = gap_bound_q([10000, 0], 1.0)
    assert report.q == 0.0
    assert -math.inf < report.log_q < -1000


def test_gap_bound_q_of_two_bins_is_a_gaussian_tail():
    # The noise difference of two bins is N(0, 2σ²), so q = ½·erfc(d / 2σ)
    assert gap_bound_q([50, 0], 25.0).q == pytest.approx(0.5 * special.erfc(1.0))


@pytest.mark.parametrize(
    "histogram, sigma", [([], 1.0), ([1, -1], 1.0), ([1, 2], 0.0)]
)
def test_gap_bound_q_invalid(histogram, sigma):
    with pytest.raises(InvalidParameterError):
        gap_bound_q(histogram, sigma)


@pytest.mark.slow
def test_gap_bound_q_bounds_the_flip_rate(rng):
    trials = 10 ** 5
    for _ in range(20):
        bins = int(rng.integers(2, 17))
        counts = rng.integers(0, 40, size=bins)
        sigma = float(rng.choice([5.0, 7.0, 20.0]))
        q = gap_bound_q(counts, sigma).q
        observed = empirical_flip_rate(counts, sigma, trials, rng)
        assert observed <= q + 3 * math.sqrt(q * (1 - q) / trials) + 1e-12


def test_empirical_flip_rate_of_a_clear_vote(rng):
    assert empirical_flip_rate([100, 0, 0], 1.0, 1000, rng, chunk=300) == 0.0


# The theorem bound


def test_theorem_bound_certain_outcome_is_free():
    params = DataDependentParams.for_linear_curve(10.0, SLOPE)
    assert theorem_bound(0.0, params, 5.0) == 0.0


def test_theorem_bound_side_conditions():
    params = DataDependentParams.for_linear_curve(10.0, SLOPE)
    above = theorem_bound(1e-20, params, 12.0)
    assert isinstance(above, BoundFailure)
    assert not above
    assert above.reason == "order above mu1"
    assert isinstance(theorem_bound(0.9, params, 2.0), BoundFailure)


def test_theorem_bound_beats_the_data_independent_value():
    params = DataDependentParams.for_linear_curve(40.0, SLOPE)
    bound = theorem_bound(1e-30, params, 20.0)
    assert 0 <= bound < 20.0 * SLOPE


def test_theorem_bound_accepts_log_q():
    params = DataDependentParams.for_linear_curve(40.0, SLOPE)
    assert theorem_bound(None, params, 20.0, log_q=math.log(1e-30)) == pytest.approx(
        theorem_bound(1e-30, params, 20.0)
    )


@pytest.mark.parametrize("order", [2.0, 10.0])
def test_theorem_bound_shrinks_with_q(order):
    params = DataDependentParams.for_linear_curve(20.0, 0.01)
    bounds = [theorem_bound(q, params, order) for q in (1e-4, 1e-6, 1e-8)]
    assert bounds[0] > bounds[1] > bounds[2] > 0
    assert bounds[0] < order * 0.01


def test_theorem_bound_invalid():
    params = DataDependentParams.for_linear_curve(10.0, SLOPE)
    with pytest.raises(InvalidParameterError):
        theorem_bound(1.5, params, 2.0)
    with pytest.raises(InvalidParameterError):
        theorem_bound(0.1, params, 1.0)
    with pytest.raises(InvalidParameterError):
        DataDependentParams(1.0, 2.0, 0.1, 0.1)


# The per-order selector


def _achieving_index(curve):
    order = to_dp(curve, DELTA).achieving_order
    return curve.grid.orders.index(order)


def test_high_consensus_votes_use_the_data_dependent_bound(rng):
    grid = OrderGrid.default()
    independent = grid.as_array() * SLOPE
    for _ in range(100):
        teachers = int(rng.integers(70, 201))
        minority = int(rng.integers(0, (teachers - 70) // 2 + 1))
        counts = [teachers - minority, minority]
        assert counts[0] - counts[1] >= 10 * SIGMA_G
        curve, report, used = data_dependent_curve(counts, BIN_SIGMA, SLOPE, grid)
        assert np.all(curve.eps <= independent)
        index = _achieving_index(curve)
        assert used[index]
        assert curve.eps[index] < independent[index]
        assert report.q_tilde == counts[0] - counts[1]


def test_random_votes_fall_back_to_the_data_independent_bound(rng):
    grid = OrderGrid.default()
    independent = grid.as_array() * SLOPE
    fallbacks = 0
    for _ in range(200):
        positive = int(rng.binomial(50, 0.5))
        curve, _, used = data_dependent_curve(
            [50 - positive, positive], BIN_SIGMA, SLOPE, grid
        )
        index = _achieving_index(curve)
        fallbacks += int(not used[index] and curve.eps[index] == independent[index])
    assert fallbacks >= 0.95 * 200


def test_selected_curve_is_never_above_either_bound():
    grid = OrderGrid([1.5, 2.0, 5.0, 10.0, 30.0])
    for gap in (0, 5, 20, 60, 200):
        curve, _, _ = data_dependent_curve([100 + gap, 100], BIN_SIGMA, SLOPE, grid)
        assert np.all(curve.eps <= grid.as_array() * SLOPE)
        assert np.all(curve.eps >= 0)


def test_data_dependent_curve_of_a_certain_outcome_is_zero():
    grid = OrderGrid([2.0, 4.0])
    curve, report, used = data_dependent_curve([5], 1.0, SLOPE, grid)
    assert report.log_q == -math.inf
    assert curve.eps.tolist() == [0.0, 0.0]
    assert used.all()


def test_is_data_independent_always_optimal():
    grid = OrderGrid.default()
    assert is_data_independent_always_optimal(1, 2, 50.0, 1 / 50.0 ** 2, grid)
    assert not is_data_independent_always_optimal(200, 2, BIN_SIGMA, SLOPE, grid)


# Closed-form estimates


def test_approx_bound():
    bound = approx_bound(400.0, SIGMA_G, second_gap=100.0)
    assert bound.order == 100.0
    assert bound.epsilon == pytest.approx(math.exp(-200.0 / 49.0) / 100.0)
    assert bound.in_regime


def test_approx_bound_warns_out_of_regime(caplog):
    with caplog.at_level(logging.WARNING, logger="pymultivote.analysis"):
        assert not approx_bound(20.0, SIGMA_G).in_regime
    assert "outside its regime" in caplog.text
    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="pymultivote.analysis"):
        assert not approx_bound(400.0, SIGMA_G, second_gap=1.0, warn=False).in_regime
    assert caplog.text == ""


@pytest.mark.parametrize("gap, sigma", [(0.0, 1.0), (-1.0, 1.0), (10.0, 0.0)])
def test_approx_bound_invalid(gap, sigma):
    with pytest.raises(InvalidParameterError):
        approx_bound(gap, sigma)


def _best_theorem_bound(report, sigma, order):
    bounds = [
        theorem_bound(
            report.q,
            DataDependentParams.for_linear_curve(float(mu2), 1.0 / sigma ** 2),
            order,
            log_q=report.log_q,
        )
        for mu2 in range(2, 400)
    ]
    return min(bound for bound in bounds if not isinstance(bound, BoundFailure))


def test_approx_bound_overestimates_the_theorem_bound(rng):
    for _ in range(50):
        sigma = rng.uniform(5.0, 20.0)
        gap = sigma * rng.uniform(10.0, 12.0)
        second_gap = sigma * rng.uniform(10.0, 12.0)
        third = rng.uniform(0.0, 50.0)
        counts = [third + second_gap + gap, third + second_gap, third]
        approx = approx_bound(gap, sigma, second_gap=second_gap)
        assert approx.in_regime
        exact = _best_theorem_bound(gap_bound_q(counts, sigma), sigma, approx.order)
        # Same trend, but the closed form stays on the safe side
        assert 0 < exact <= approx.epsilon
        assert approx.epsilon < approx.order / sigma ** 2


def test_powerset_gap_estimate():
    collisions, gap = powerset_gap_estimate(50, 0.5)
    assert collisions == pytest.approx(math.e * 25)
    assert gap == 50.0
    collisions, gap = powerset_gap_estimate(50, 0.001)
    assert collisions == pytest.approx(math.e * 0.05)
    assert gap == 0.0
    assert powerset_gap_estimate(50, 0.02)[1] == pytest.approx(math.e - 1)
    with pytest.raises(InvalidParameterError):
        powerset_gap_estimate(50, 1.0)
    with pytest.raises(InvalidParameterError):
        powerset_gap_estimate(0, 0.5)


def test_stirling_bound_holds_exhaustively():
    for n in range(1, 31):
        for k in range(1, n + 1):
            assert stirling_binom_upper(n, k) >= special.comb(n, k, exact=True)
    with pytest.raises(InvalidParameterError):
        stirling_binom_upper(3, 4)
    with pytest.raises(InvalidParameterError):
        stirling_binom_upper(3, 0)


# The sensitivity oracle


def _check_witness(function, report):
    left, right = report.witness
    assert np.count_nonzero(np.any(left.bits != right.bits, axis=1)) == 1
    distance = np.linalg.norm(
        np.asarray(function(left), float) - np.asarray(function(right), float),
        ord=report.p,
    )
    assert distance == pytest.approx(report.value)


@pytest.mark.parametrize("voters, candidates", [(1, 1), (2, 2), (3, 3), (2, 3)])
def test_unclipped_binary_sensitivity(voters, candidates):
    function = stacked_histogram()
    report = sensitivity_oracle(function, voters, candidates, 2)
    assert report.value == pytest.approx(math.sqrt(2.0 * candidates), abs=1e-9)
    _check_witness(function, report)


@pytest.mark.parametrize("tau", [0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("voters, candidates", [(1, 1), (2, 2), (2, 3), (3, 3)])
def test_clipped_binary_sensitivity(voters, candidates, tau):
    function = stacked_histogram(tau)
    report = sensitivity_oracle(function, voters, candidates, 2, adjacency=BLANK)
    expected = math.sqrt(2.0) * min(tau, math.sqrt(candidates))
    assert report.value == pytest.approx(expected, abs=1e-9)
    _check_witness(function, report)


def test_replacing_a_clipped_ballot_can_move_further():
    report = sensitivity_oracle(stacked_histogram(1.0), 2, 2, 2, adjacency=REPLACE)
    assert report.value == pytest.approx(2.0)


def test_coordinate_independent_l1_sensitivity_adds_up():
    functions = [
        lambda column: [column.sum()],
        lambda column: [column.sum() ** 2, 3.0 * column[0]],
        lambda column: [float(np.all(column))],
    ]
    combined = sensitivity_oracle(coordinate_independent(functions), 3, 3, 1)
    parts = [
        sensitivity_oracle(
            lambda ballots, function=function: np.atleast_1d(
                np.asarray(function(ballots.bits[:, 0]), float)
            ),
            3,
            1,
            1,
        ).value
        for function in functions
    ]
    assert combined.value == pytest.approx(sum(parts))
    assert parts == pytest.approx([1.0, 8.0, 1.0])


def test_positive_counts_sensitivity():
    report = sensitivity_oracle(positive_counts, 2, 3, np.inf)
    assert report.value == 1.0


def test_oracle_refuses_large_domains():
    with pytest.raises(DomainTooLargeError):
        sensitivity_oracle(positive_counts, 5, 2, 2)
    with pytest.raises(DomainTooLargeError):
        sensitivity_oracle(positive_counts, 2, 5, 2)
    with pytest.raises(InvalidParameterError):
        sensitivity_oracle(positive_counts, 2, 2, 2, adjacency="swap")


def test_oracle_works_on_plain_ballots():
    ballots = BallotMatrix([[1, 0], [1, 1]])
    assert positive_counts(ballots).tolist() == [2.0, 1.0]
    assert stacked_histogram()(ballots).tolist() == [0.0, 1.0, 2.0, 1.0]
