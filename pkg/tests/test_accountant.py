"""Tests for the accountant module."""


import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pymultivote.accountant import (
    BudgetLedger,
    DpGuarantee,
    OrderGrid,
    RdpCurve,
    clipped_sensitivity,
    compose,
    gaussian_rdp,
    gaussian_threshold_rdp,
    to_dp,
)
from pymultivote.ballots import L1, L2
from pymultivote.exceptions import (
    GridMismatchError,
    InvalidParameterError,
    LedgerFileError,
)

SMALL_GRID = OrderGrid([2.0, 4.0, 8.0])

eps_values = st.lists(
    st.floats(min_value=0, max_value=1e3, allow_nan=False),
    min_size=len(SMALL_GRID),
    max_size=len(SMALL_GRID),
)
curves = eps_values.map(lambda eps: RdpCurve(SMALL_GRID, eps))


# OrderGrid


def test_default_grid():
    grid = OrderGrid.default()
    assert grid.orders[:3] == (1.25, 1.5, 2.0)
    assert grid.orders[-1] == 64.0
    assert len(grid) == 65
    assert grid == OrderGrid.default()
    assert hash(grid) == hash(OrderGrid.default())


@pytest.mark.parametrize("orders", [[], [1.0, 2.0], [2.0, 2.0], [3.0, 2.0], [0.5]])
def test_invalid_grid(orders):
    with pytest.raises(InvalidParameterError):
        OrderGrid(orders)


def test_grid_is_read_only():
    with pytest.raises(ValueError):
        SMALL_GRID.as_array()[0] = 5.0


# RdpCurve


def test_gaussian_rdp_values():
    cost = gaussian_rdp(math.sqrt(2.0), 2.0, SMALL_GRID)
    # λ·2/(2·4)
    assert cost.eps.tolist() == [0.5, 1.0, 2.0]
    assert gaussian_threshold_rdp(1.0, SMALL_GRID).eps.tolist() == [1.0, 2.0, 4.0]


@pytest.mark.parametrize("delta2, sigma", [(1.0, 0.0), (1.0, -1.0), (-1.0, 1.0)])
def test_gaussian_rdp_invalid(delta2, sigma):
    with pytest.raises(InvalidParameterError):
        gaussian_rdp(delta2, sigma, SMALL_GRID)


@pytest.mark.parametrize("eps", [[1.0, 2.0], [1.0, -1.0, 0.0], [1.0, math.nan, 1.0]])
def test_invalid_curve(eps):
    with pytest.raises(InvalidParameterError):
        RdpCurve(SMALL_GRID, eps)


def test_curve_arithmetic():
    cost = RdpCurve(SMALL_GRID, [1.0, 2.0, 3.0])
    assert (cost + cost).eps.tolist() == [2.0, 4.0, 6.0]
    assert (cost * 3).eps.tolist() == [3.0, 6.0, 9.0]
    assert (3 * cost) == cost * 3
    assert cost * 0 == RdpCurve.zero(SMALL_GRID)
    assert cost.at(4) == 2.0
    with pytest.raises(InvalidParameterError):
        cost.at(3.0)
    with pytest.raises(InvalidParameterError):
        cost * -1


def test_curve_minimum_and_infinite():
    cost = RdpCurve(SMALL_GRID, [1.0, 2.0, 3.0])
    other = RdpCurve(SMALL_GRID, [2.0, 1.0, 3.0])
    assert cost.minimum(other).eps.tolist() == [1.0, 1.0, 3.0]
    assert not RdpCurve.infinite(SMALL_GRID).is_finite()
    assert (cost + RdpCurve.infinite(SMALL_GRID)).eps.tolist() == [math.inf] * 3


def test_curves_on_different_grids_do_not_mix():
    cost = RdpCurve(SMALL_GRID, [1.0, 2.0, 3.0])
    other = RdpCurve(OrderGrid([2.0, 4.0, 16.0]), [1.0, 2.0, 3.0])
    with pytest.raises(GridMismatchError):
        cost + other
    with pytest.raises(GridMismatchError):
        cost.minimum(other)


def test_compose_empty_is_zero():
    assert compose([], SMALL_GRID) == RdpCurve.zero(SMALL_GRID)
    assert compose([]).grid == OrderGrid.default()


@given(curves, curves, curves)
def test_composition_is_associative_and_commutative(first, second, third):
    left = (first + second) + third
    right = first + (second + third)
    np.testing.assert_allclose(left.eps, right.eps, rtol=1e-12)
    assert first + second == second + first


@given(
    st.floats(min_value=0.1, max_value=10),
    st.floats(min_value=0.5, max_value=50),
    st.integers(min_value=1, max_value=1000),
)
def test_repeated_gaussian_is_gaussian_with_scaled_sensitivity(delta2, sigma, times):
    repeated = gaussian_rdp(delta2, sigma, SMALL_GRID) * times
    scaled = gaussian_rdp(delta2 * math.sqrt(times), sigma, SMALL_GRID)
    np.testing.assert_allclose(repeated.eps, scaled.eps, rtol=1e-9)


# Conversion


def test_to_dp_hand_computed():
    cost = RdpCurve(SMALL_GRID, [1.0, 2.0, 4.0])
    guarantee = to_dp(cost, math.exp(-3.0))
    # 1 + 3/1 = 4, 2 + 3/3 = 3, 4 + 3/7 > 4
    assert guarantee.epsilon == pytest.approx(3.0)
    assert guarantee.achieving_order == 4.0
    assert guarantee.delta == pytest.approx(math.exp(-3.0))


def test_to_dp_ties_go_to_the_smallest_order():
    assert to_dp(RdpCurve.infinite(SMALL_GRID), 1e-5).achieving_order == 2.0


def test_to_dp_zero_curve():
    guarantee = to_dp(RdpCurve.zero(SMALL_GRID), 1e-5)
    assert guarantee.epsilon == pytest.approx(math.log(1e5) / 7.0)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
def test_to_dp_invalid_delta(delta):
    with pytest.raises(InvalidParameterError):
        to_dp(RdpCurve.zero(SMALL_GRID), delta)


@given(curves, curves)
def test_to_dp_is_monotone(first, second):
    assert (
        to_dp(first + second, 1e-5).epsilon >= to_dp(first, 1e-5).epsilon - 1e-9
    )


# Sensitivity


def test_clipped_sensitivity():
    assert clipped_sensitivity(None, L2, 4) == pytest.approx(math.sqrt(8))
    assert clipped_sensitivity(math.inf, L2, 4) == pytest.approx(math.sqrt(8))
    assert clipped_sensitivity(1.0, L2, 4) == pytest.approx(math.sqrt(2))
    assert clipped_sensitivity(5.0, L2, 4) == pytest.approx(math.sqrt(8))
    assert clipped_sensitivity(1.0, L1, 4) == pytest.approx(2.0)
    assert clipped_sensitivity(5.0, L1, 4) == pytest.approx(math.sqrt(8))
    with pytest.raises(InvalidParameterError):
        clipped_sensitivity(0.0, L2, 4)
    with pytest.raises(InvalidParameterError):
        clipped_sensitivity(1.0, "linf", 4)


def test_l2_clipping_is_over_six_times_cheaper_than_l1():
    # τ₁ = 3.4 and τ₂ = 1.8 give comparable accuracy
    grid = OrderGrid.default()
    l1 = gaussian_rdp(clipped_sensitivity(3.4, L1, 100), 7.0, grid)
    l2 = gaussian_rdp(clipped_sensitivity(1.8, L2, 100), 7.0, grid)
    ratio = l1.eps / l2.eps
    np.testing.assert_allclose(ratio, 2 * 3.4 ** 2 / 1.8 ** 2)
    assert np.all(ratio > 6)


# DpGuarantee


@pytest.mark.parametrize("epsilon, delta", [(-1.0, 1e-5), (1.0, 0.0), (1.0, 1.0)])
def test_invalid_guarantee(epsilon, delta):
    with pytest.raises(InvalidParameterError):
        DpGuarantee(epsilon, delta)


# BudgetLedger


def test_ledger_refuses_what_does_not_fit():
    ledger = BudgetLedger(DpGuarantee(3.0, math.exp(-3.0)), grid=SMALL_GRID)
    cost = RdpCurve(SMALL_GRID, [0.0, 0.0, 0.0])
    assert not ledger.would_exceed(cost)
    assert not ledger.charge(cost)
    assert ledger.charges == 1
    expensive = RdpCurve(SMALL_GRID, [100.0, 100.0, 100.0])
    assert ledger.would_exceed(expensive)
    assert ledger.charge(expensive)
    assert ledger.exhausted
    # The refused charge is not added
    assert ledger.accumulated == RdpCurve.zero(SMALL_GRID)
    assert ledger.charges == 1
    # Exhaustion is sticky even for a free release
    assert ledger.charge(cost)
    assert ledger.charges == 1
    assert ledger.exhausted


def test_exhausted_ledger_refuses_a_charge_that_would_fit():
    ledger = BudgetLedger(DpGuarantee(3.0, math.exp(-3.0)), grid=SMALL_GRID)
    small = RdpCurve(SMALL_GRID, [0.1, 0.1, 0.1])
    assert ledger.charge(RdpCurve(SMALL_GRID, [100.0, 100.0, 100.0]))
    assert not ledger.would_exceed(small)
    assert ledger.charge(small)
    assert ledger.accumulated == RdpCurve.zero(SMALL_GRID)
    with pytest.raises(GridMismatchError):
        ledger.charge(RdpCurve.zero(OrderGrid.default()))


def test_ledger_spent_stays_within_budget():
    budget = DpGuarantee(4.0, 1e-5)
    ledger = BudgetLedger(budget, grid=SMALL_GRID)
    cost = gaussian_rdp(1.0, 5.0, SMALL_GRID)
    while not ledger.charge(cost):
        pass
    assert ledger.spent().epsilon <= budget.epsilon
    assert ledger.charges > 0


def test_ledger_rejects_other_grids():
    ledger = BudgetLedger(DpGuarantee(3.0, 1e-5), grid=SMALL_GRID)
    with pytest.raises(GridMismatchError):
        ledger.charge(RdpCurve.zero(OrderGrid.default()))


def test_remaining_capacity():
    ledger = BudgetLedger(DpGuarantee(10.0, 1e-5))
    cost = gaussian_rdp(1.0, 5.0, ledger.grid)
    capacity = ledger.remaining_capacity(cost)
    assert capacity > 0
    assert to_dp(cost * capacity, 1e-5).epsilon <= 10.0
    assert to_dp(cost * (capacity + 1), 1e-5).epsilon > 10.0
    assert ledger.remaining_capacity(RdpCurve.zero(ledger.grid), limit=50) == 50


def test_twenty_labels_do_not_fit_epsilon_one():
    ledger = BudgetLedger(DpGuarantee(1.0, 1e-5))
    per_query = gaussian_rdp(math.sqrt(2.0), 7.0, ledger.grid) * 20
    assert ledger.remaining_capacity(per_query) == 0


def test_ledger_json_round_trip(tmp_path):
    ledger = BudgetLedger(DpGuarantee(5.0, 1e-5), grid=SMALL_GRID)
    ledger.charge(RdpCurve(SMALL_GRID, [0.25, 0.5, 1.0]))
    restored = BudgetLedger.from_json(ledger.to_json())
    assert restored.accumulated == ledger.accumulated
    assert restored.budget == ledger.budget
    path = str(tmp_path / "ledger.json")
    ledger.save(path)
    assert BudgetLedger.load(path).accumulated == ledger.accumulated


def test_load_ledger_fixture(ballot_data):
    ledger = BudgetLedger.load(ballot_data.path("ledger.json"))
    assert ledger.grid == SMALL_GRID
    assert ledger.accumulated.eps.tolist() == [0.5, 1.0, 2.0]
    assert ledger.budget == DpGuarantee(5.0, 1e-5)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        '{"orders": [2.0], "eps": [1.0]}',
        '{"orders": [2.0, 4.0], "eps": [1.0], "budget": {"epsilon": 1, "delta": 0.1}}',
        '{"orders": [2.0], "eps": [-1.0], "budget": {"epsilon": 1, "delta": 0.1}}',
    ],
)
def test_corrupt_ledger(text):
    with pytest.raises(LedgerFileError):
        BudgetLedger.from_json(text)


def test_corrupt_ledger_file(ballot_data):
    with pytest.raises(LedgerFileError) as error:
        BudgetLedger.load(ballot_data.path("corrupt_ledger.json"))
    assert error.value.__cause__ is not None
