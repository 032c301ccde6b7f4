"""Rényi differential privacy accounting.

Every release made by a mechanism is priced as an `RdpCurve`: one ε value
for each Rényi order λ of a fixed `OrderGrid`. Curves compose by pointwise
addition and are converted to an (ε, δ) guarantee with the standard
conversion ``ε(λ) + ln(1/δ) / (λ - 1)`` minimised over the grid.

A `BudgetLedger` keeps the running total for a labelling run. It is
pre-commit: the caller asks `BudgetLedger.would_exceed` before releasing
a query, and a query that does not fit is neither answered nor charged.

Example:

    >>> grid = OrderGrid([2.0, 4.0, 8.0])
    >>> cost = gaussian_rdp(1.0, 1.0, grid)
    >>> cost.eps.tolist()
    [1.0, 2.0, 4.0]
    >>> to_dp(cost * 3, 1e-5).epsilon > 0
    True
"""


import json
import logging
import math

import numpy as np

from . import config
from .ballots import L1, L2
from .exceptions import GridMismatchError, InvalidParameterError, LedgerFileError

_LOG = logging.getLogger(__name__)


class OrderGrid:

    """An immutable, strictly increasing list of Rényi orders, all above 1."""

    def __init__(self, orders):
        """
        Args:
            orders (Iterable[float]): The orders λ. Must be non-empty,
                strictly increasing and every order must exceed 1.

        Raises:
            InvalidParameterError: if the orders break any of the above.
        """
        orders = tuple(float(order) for order in orders)
        if not orders:
            raise InvalidParameterError("An order grid needs at least one order")
        if any(order <= 1.0 or math.isnan(order) for order in orders):
            raise InvalidParameterError("Every Rényi order must exceed 1")
        if any(low >= high for low, high in zip(orders, orders[1:])):
            raise InvalidParameterError("Rényi orders must be strictly increasing")
        self._orders = orders
        self._array = np.array(orders)
        self._array.setflags(write=False)

    @classmethod
    def default(cls):
        """Return the grid of `config.DEFAULT_ORDERS`."""
        return cls(config.DEFAULT_ORDERS)

    @property
    def orders(self):
        """tuple(float): The orders of the grid."""
        return self._orders

    def as_array(self):
        """Return the orders as a read-only `numpy.ndarray`."""
        return self._array

    def __len__(self):
        return len(self._orders)

    def __iter__(self):
        return iter(self._orders)

    def __eq__(self, other):
        if not isinstance(other, OrderGrid):
            return NotImplemented
        return self._orders == other._orders

    def __hash__(self):
        return hash(self._orders)

    def __repr__(self):
        if len(self._orders) > 4:
            middle = "{}, ..., {}".format(self._orders[0], self._orders[-1])
        else:
            middle = ", ".join(str(order) for order in self._orders)
        return "{}([{}])".format(self.__class__.__name__, middle)


class RdpCurve:

    """The RDP guarantee ε(λ) of a release, one value per order of a grid.

    Curves are immutable. ``a + b`` composes two curves, ``curve * m`` is the
    m-fold composition of the same release. An infinite entry marks a release
    that cannot be priced, such as a zero-noise oracle query.
    """

    def __init__(self, grid, eps):
        """
        Args:
            grid (OrderGrid): The orders the values belong to.
            eps (Iterable[float]): One non-negative value per order, in nats.

        Raises:
            InvalidParameterError: if the length does not match the grid or a
                value is negative or NaN.
        """
        eps = np.array(eps, dtype=np.float64).reshape(-1)
        if eps.shape[0] != len(grid):
            raise InvalidParameterError(
                "Expected {} RDP values, got {}".format(len(grid), eps.shape[0])
            )
        if np.any(np.isnan(eps)) or np.any(eps < 0):
            raise InvalidParameterError("RDP values must be non-negative")
        eps.setflags(write=False)
        #: `OrderGrid`: The orders of this curve
        self.grid = grid
        #: `numpy.ndarray`: The read-only ε values, aligned with the grid
        self.eps = eps

    @classmethod
    def zero(cls, grid):
        """Return the additive identity on ``grid``."""
        return cls(grid, np.zeros(len(grid)))

    @classmethod
    def infinite(cls, grid):
        """Return a curve which no finite budget can afford."""
        return cls(grid, np.full(len(grid), np.inf))

    def _check_grid(self, other):
        if self.grid != other.grid:
            raise GridMismatchError(
                "Cannot combine curves on {!r} and {!r}".format(self.grid, other.grid)
            )

    def __add__(self, other):
        if not isinstance(other, RdpCurve):
            return NotImplemented
        return compose([self, other])

    def __mul__(self, times):
        if isinstance(times, bool) or not isinstance(times, (int, np.integer)):
            return NotImplemented
        if times < 0:
            raise InvalidParameterError("Cannot compose a negative number of times")
        if times == 0:
            return RdpCurve.zero(self.grid)
        return RdpCurve(self.grid, self.eps * times)

    __rmul__ = __mul__

    def minimum(self, other):
        """Return the pointwise minimum of this curve and ``other``.

        Both curves must be valid guarantees for the same release, in which
        case the minimum is one too.
        """
        self._check_grid(other)
        return RdpCurve(self.grid, np.minimum(self.eps, other.eps))

    def at(self, order):
        """Return ε at ``order``, which must be on the grid."""
        try:
            return float(self.eps[self.grid.orders.index(float(order))])
        except ValueError as error:
            raise InvalidParameterError(
                "Order {} is not on the grid".format(order)
            ) from error

    def is_finite(self):
        """bool: `True` if every entry is finite."""
        return bool(np.all(np.isfinite(self.eps)))

    def to_dict(self):
        """Return a JSON-compatible dict of the curve."""
        return {"orders": list(self.grid.orders), "eps": self.eps.tolist()}

    def __eq__(self, other):
        if not isinstance(other, RdpCurve):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.eps, other.eps)

    def __hash__(self):
        return hash((self.grid, self.eps.tobytes()))

    def __repr__(self):
        return "{}({!r}, max_eps={:g})".format(
            self.__class__.__name__,
            self.grid,
            float(np.max(self.eps)),
        )


class DpGuarantee:

    """An (ε, δ)-differential privacy guarantee.

    Also used as a budget target, in which case ``achieving_order`` is
    `None`.
    """

    def __init__(self, epsilon, delta, achieving_order=None):
        """
        Args:
            epsilon (float): Non-negative ε, may be infinite.
            delta (float): δ in the open interval (0, 1).
            achieving_order (float, optional): The Rényi order the
                conversion was attained at.

        Raises:
            InvalidParameterError: if ε or δ is out of range.
        """
        epsilon = float(epsilon)
        delta = float(delta)
        if math.isnan(epsilon) or epsilon < 0:
            raise InvalidParameterError("epsilon must be non-negative")
        if not 0.0 < delta < 1.0:
            raise InvalidParameterError("delta must lie in (0, 1), got %r" % delta)
        #: `float`: The privacy loss ε
        self.epsilon = epsilon
        #: `float`: The failure probability δ
        self.delta = delta
        #: `float`: The Rényi order attaining ε, if converted from a curve
        self.achieving_order = achieving_order

    def to_dict(self):
        """Return a JSON-compatible dict of the guarantee."""
        result = {"epsilon": self.epsilon, "delta": self.delta}
        if self.achieving_order is not None:
            result["achieving_order"] = self.achieving_order
        return result

    def __eq__(self, other):
        if not isinstance(other, DpGuarantee):
            return NotImplemented
        return (self.epsilon, self.delta, self.achieving_order) == (
            other.epsilon,
            other.delta,
            other.achieving_order,
        )

    def __repr__(self):
        return "{}(epsilon={!r}, delta={!r}, achieving_order={!r})".format(
            self.__class__.__name__, self.epsilon, self.delta, self.achieving_order
        )


def gaussian_rdp(delta2, sigma, grid):
    """Price a Gaussian release with ℓ2 sensitivity ``delta2`` and noise
    standard deviation ``sigma``.

    ε(λ) = λ·Δ₂² / (2σ²) on every order of the grid. The same formula holds
    when the released quantity is a vector, as for the stacked per-label
    histograms of the voting mechanisms.

    Args:
        delta2 (float): The ℓ2 sensitivity, non-negative.
        sigma (float): The noise standard deviation, positive.
        grid (OrderGrid): The orders to evaluate.

    Returns:
        RdpCurve: The cost of one release.

    Raises:
        InvalidParameterError: if ``sigma`` is not positive or ``delta2`` is
            negative.
    """
    if not sigma > 0:
        raise InvalidParameterError("sigma must be positive, got %r" % sigma)
    if not delta2 >= 0:
        raise InvalidParameterError("sensitivity must be non-negative")
    return RdpCurve(grid, grid.as_array() * delta2 ** 2 / (2.0 * sigma ** 2))


def gaussian_threshold_rdp(sigma_t, grid):
    """Price one noisy consensus check with noise ``sigma_t``.

    The check compares the largest count against a threshold; one voter moves
    that count by at most 1, so it is a Gaussian release with Δ₂ = 1.
    """
    return gaussian_rdp(1.0, sigma_t, grid)


def clipped_sensitivity(tau, norm, k):
    """Return the ℓ2 sensitivity of the stacked (V⁰, V¹) label histogram.

    For ℓ2 clipping at τ the changed voter moves V¹ by a vector of norm at
    most min(τ, √k) and V⁰ by its negation, hence √2·min(τ, √k). For ℓ1
    clipping the bound used for comparison is 2τ, never more than the
    unclipped √2·√k.

    Args:
        tau (float): The clipping bound, `None` or infinite for no clipping.
        norm (str): `L1` or `L2`.
        k (int): The number of candidates.

    Returns:
        float: Δ₂ of the stacked histogram.
    """
    unclipped = math.sqrt(2.0 * k)
    if tau is None or math.isinf(tau):
        return unclipped
    if tau <= 0:
        raise InvalidParameterError("tau must be positive, got %r" % tau)
    if norm == L2:
        return math.sqrt(2.0) * min(tau, math.sqrt(k))
    if norm == L1:
        return min(2.0 * tau, unclipped)
    raise InvalidParameterError("Unknown clipping norm %r" % norm)


def compose(curves, grid=None):
    """Compose releases: the pointwise sum of their curves.

    Args:
        curves (Iterable[RdpCurve]): The curves to compose. All must share a
            grid.
        grid (OrderGrid, optional): The grid of the result if ``curves`` is
            empty. Defaults to `OrderGrid.default`.

    Returns:
        RdpCurve: The composed curve; the zero curve for no input.

    Raises:
        GridMismatchError: if the curves are on different grids.
    """
    curves = list(curves)
    if not curves:
        return RdpCurve.zero(grid if grid is not None else OrderGrid.default())
    grid = curves[0].grid
    for curve in curves[1:]:
        if curve.grid != grid:
            raise GridMismatchError(
                "Cannot compose curves on {!r} and {!r}".format(grid, curve.grid)
            )
    # One row per order so numpy reduces each order with pairwise summation
    stacked = np.ascontiguousarray(np.stack([curve.eps for curve in curves], axis=1))
    with np.errstate(invalid="ignore"):
        return RdpCurve(grid, stacked.sum(axis=1))


def to_dp(curve, delta):
    """Convert an RDP curve to an (ε, δ) guarantee.

    Returns the minimum over the grid of ``ε(λ) + ln(1/δ) / (λ - 1)``; ties
    go to the smallest order.

    Args:
        curve (RdpCurve): The curve to convert.
        delta (float): Target δ in (0, 1).

    Returns:
        DpGuarantee: The guarantee and its achieving order.

    Raises:
        InvalidParameterError: if ``delta`` is outside (0, 1).
    """
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError("delta must lie in (0, 1), got %r" % delta)
    orders = curve.grid.as_array()
    converted = curve.eps + math.log(1.0 / delta) / (orders - 1.0)
    index = int(np.argmin(converted))
    return DpGuarantee(converted[index], delta, float(orders[index]))


class BudgetLedger:

    """The running privacy spend of a labelling run against a budget.

    The ledger only ever grows. Use `would_exceed` before releasing a query;
    `charge` refuses a cost that does not fit and reports the budget as
    exhausted from then on.

    The ledger is single-owner mutable state. Callers sharing one must
    serialise their calls to `charge`.
    """

    def __init__(self, budget, grid=None, accumulated=None):
        """
        Args:
            budget (DpGuarantee): The target (ε, δ).
            grid (OrderGrid, optional): The order grid. Defaults to the grid
                of ``accumulated`` or `OrderGrid.default`.
            accumulated (RdpCurve, optional): Spend carried over from a
                previous run.
        """
        if grid is None:
            grid = accumulated.grid if accumulated is not None else OrderGrid.default()
        if accumulated is None:
            accumulated = RdpCurve.zero(grid)
        elif accumulated.grid != grid:
            raise GridMismatchError("Carried-over spend is on a different grid")
        #: `DpGuarantee`: The budget
        self.budget = budget
        #: `OrderGrid`: The orders all charges must be priced on
        self.grid = grid
        self._eps = np.array(accumulated.eps, dtype=np.float64)
        # Compensation terms of the running sum
        self._carry = np.zeros(len(grid))
        self._charges = 0
        self._exhausted = self._converts_above_budget(self._eps)

    def __repr__(self):
        return "<{} spent={:g}/{:g} charges={} at {}>".format(
            self.__class__.__name__,
            self.spent().epsilon,
            self.budget.epsilon,
            self._charges,
            hex(id(self)),
        )

    @property
    def accumulated(self):
        """RdpCurve: The composed cost of everything charged so far."""
        return RdpCurve(self.grid, self._eps + self._carry)

    @property
    def exhausted(self):
        """bool: `True` once a charge has been refused or the spend exceeds
        the budget. Never flips back."""
        return self._exhausted

    @property
    def charges(self):
        """int: The number of accepted charges."""
        return self._charges

    def spent(self):
        """Return the (ε, δ) guarantee of the spend so far."""
        return to_dp(self.accumulated, self.budget.delta)

    def _check(self, cost):
        if cost.grid != self.grid:
            raise GridMismatchError(
                "Cost on {!r} charged to a ledger on {!r}".format(cost.grid, self.grid)
            )

    def _converts_above_budget(self, eps):
        return to_dp(RdpCurve(self.grid, eps), self.budget.delta).epsilon > (
            self.budget.epsilon
        )

    def _sum_with(self, cost):
        # Neumaier summation keeps long runs of tiny charges from drifting
        total = self._eps + cost.eps
        with np.errstate(invalid="ignore"):
            carry = np.where(
                np.abs(self._eps) >= np.abs(cost.eps),
                (self._eps - total) + cost.eps,
                (cost.eps - total) + self._eps,
            )
        carry = np.where(np.isfinite(carry), carry, 0.0)
        return total, self._carry + carry

    def would_exceed(self, cost):
        """Return `True` if charging ``cost`` would overdraw the budget.

        Args:
            cost (RdpCurve): The cost of the release being considered.

        Raises:
            GridMismatchError: if ``cost`` is on another grid.
        """
        self._check(cost)
        total, carry = self._sum_with(cost)
        return self._converts_above_budget(total + carry)

    def charge(self, cost):
        """Charge ``cost`` if it fits the budget.

        A cost that would overdraw the budget is not added; the ledger is
        marked exhausted instead. An exhausted ledger refuses every later
        charge, free ones included.

        Args:
            cost (RdpCurve): The cost of the release.

        Returns:
            bool: Whether the budget is exhausted after this call.

        Raises:
            GridMismatchError: if ``cost`` is on another grid.
        """
        if self._exhausted:
            self._check(cost)
            return True
        if self.would_exceed(cost):
            _LOG.info(
                "Budget of epsilon=%g exhausted after %d charges",
                self.budget.epsilon,
                self._charges,
            )
            self._exhausted = True
            return True
        total, carry = self._sum_with(cost)
        self._eps = total
        self._carry = carry
        self._charges += 1
        _LOG.debug(
            "Charged max eps %g, spent %g", np.max(cost.eps), self.spent().epsilon
        )
        return False

    def remaining_capacity(self, cost, limit=10 ** 9):
        """Return how many more releases priced at ``cost`` the budget allows.

        Args:
            cost (RdpCurve): The cost of a single release.
            limit (int): Where to stop counting; returned for costs so small
                that the budget never runs out.

        Returns:
            int: The largest m such that m further charges of ``cost`` fit.
        """
        self._check(cost)

        def fits(times):
            return not self._converts_above_budget(
                self._eps + self._carry + cost.eps * times
            )

        if not fits(0):
            return 0
        if fits(limit):
            return limit
        low, high = 0, 1
        while fits(high):
            low, high = high, high * 2
        while high - low > 1:
            middle = (low + high) // 2
            if fits(middle):
                low = middle
            else:
                high = middle
        return low

    def to_dict(self):
        """Return the JSON-compatible persisted form of the ledger."""
        return {
            "orders": list(self.grid.orders),
            "eps": (self._eps + self._carry).tolist(),
            "budget": {"epsilon": self.budget.epsilon, "delta": self.budget.delta},
        }

    def to_json(self):
        """Return the ledger as a JSON document."""
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        """Rebuild a ledger persisted by `to_json`.

        Raises:
            LedgerFileError: if the document is not a valid ledger.
        """
        try:
            data = json.loads(text)
            grid = OrderGrid(data["orders"])
            accumulated = RdpCurve(grid, data["eps"])
            budget = DpGuarantee(data["budget"]["epsilon"], data["budget"]["delta"])
        except (ValueError, KeyError, TypeError) as error:
            raise LedgerFileError("Corrupt budget ledger: {}".format(error)) from error
        return cls(budget, grid=grid, accumulated=accumulated)

    def save(self, path):
        """Write the ledger to ``path``."""
        with open(path, "w", encoding="utf-8") as file_:
            file_.write(self.to_json())

    @classmethod
    def load(cls, path):
        """Read a ledger written by `save`.

        Raises:
            LedgerFileError: if the file is unreadable or corrupt.
        """
        try:
            with open(path, encoding="utf-8") as file_:
                text = file_.read()
        except OSError as error:
            raise LedgerFileError(
                "Cannot read budget ledger {}".format(path)
            ) from error
        return cls.from_json(text)
