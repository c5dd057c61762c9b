"""Budget enforcement: worked examples plus feasibility under random fuzzing."""

import numpy as np
from hypothesis import given, strategies as st

from bubblelab import Portfolio, Side, enforce_budget
from conftest import ask, bid


def test_margin_example_whole_bid_cancelled():
    # cash 50, bids {(20,2),(15,1)}: outlay 55 > 50, cancel the 15-bid whole.
    orders = [bid(20, 2, seq=0), bid(15, 1, seq=1)]
    kept, cancels = enforce_budget(orders, Portfolio(cash=50, shares=0, wapp=14))
    assert [(o.price, o.quantity) for o in kept] == [(20, 2)]
    assert len(cancels) == 1
    assert cancels[0].order.price == 15
    assert cancels[0].quantity_removed == 1
    assert cancels[0].reason == "margin"


def test_short_example_partial_reduction_on_lowest_ask():
    # shares 3, asks {(16,2),(14,2)}: reduce the 14-ask to quantity 1.
    orders = [ask(16, 2, seq=0), ask(14, 2, seq=1)]
    kept, cancels = enforce_budget(orders, Portfolio(cash=0, shares=3, wapp=14))
    assert sorted((o.price, o.quantity) for o in kept) == [(14, 1), (16, 2)]
    assert len(cancels) == 1
    assert cancels[0].order.price == 14
    assert cancels[0].quantity_removed == 1
    assert cancels[0].reason == "short"


def test_exactly_binding_constraints_unchanged():
    # shares 4, cash 100, asks {(15,4)}, bids {(10,10)}: both exactly feasible.
    orders = [ask(15, 4, seq=0), bid(10, 10, seq=1)]
    kept, cancels = enforce_budget(orders, Portfolio(cash=100, shares=4, wapp=14))
    assert sorted((o.side, o.price, o.quantity) for o in kept) == [
        (Side.BUY, 10, 10), (Side.SELL, 15, 4),
    ]
    assert cancels == []


def test_marginal_bid_partially_reduced():
    # cash 25, one bid (10,3): outlay 30, shortfall 5 -> cut ceil(5/10)=1 share.
    kept, cancels = enforce_budget([bid(10, 3)], Portfolio(cash=25, shares=0, wapp=14))
    assert [(o.price, o.quantity) for o in kept] == [(10, 2)]
    assert cancels[0].quantity_removed == 1


def test_empty_orders_pass_through():
    kept, cancels = enforce_budget([], Portfolio(cash=10, shares=1, wapp=14))
    assert kept == [] and cancels == []


def test_kept_orders_in_submission_order():
    orders = [ask(20, 1, seq=0), bid(5, 1, seq=1), ask(18, 1, seq=2)]
    kept, _ = enforce_budget(orders, Portfolio(cash=100, shares=2, wapp=14))
    assert [o.seq for o in kept] == [0, 1, 2]


def assert_feasible(orders, portfolio, kept, cancels):
    sell_total = sum(o.quantity for o in kept if o.side is Side.SELL)
    outlay = sum(o.price * o.quantity for o in kept if o.side is Side.BUY)
    assert sell_total <= portfolio.shares
    assert outlay <= portfolio.cash
    # Everything submitted is either kept or accounted for in cancellations.
    removed = sum(c.quantity_removed for c in cancels)
    kept_qty = sum(o.quantity for o in kept)
    assert kept_qty + removed == sum(o.quantity for o in orders)


def random_case(rng):
    portfolio = Portfolio(cash=int(rng.integers(0, 200)), shares=int(rng.integers(0, 12)), wapp=14)
    orders = []
    for seq in range(int(rng.integers(0, 7))):
        price = int(rng.integers(1, 41))
        quantity = int(rng.integers(1, 6))
        if rng.random() < 0.5:
            orders.append(bid(price, quantity, seq=seq))
        else:
            orders.append(ask(price, quantity, seq=seq))
    return orders, portfolio


def test_feasibility_10000_random_cases():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        orders, portfolio = random_case(rng)
        kept, cancels = enforce_budget(orders, portfolio)
        assert_feasible(orders, portfolio, kept, cancels)


order_strategy = st.tuples(
    st.integers(min_value=1, max_value=40),
    st.integers(min_value=1, max_value=5),
    st.booleans(),
)


@given(
    st.lists(order_strategy, min_size=0, max_size=8),
    st.integers(min_value=0, max_value=300),
    st.integers(min_value=0, max_value=15),
)
def test_feasibility_property(entries, cash, shares):
    orders = [
        bid(p, q, seq=i) if is_bid else ask(p, q, seq=i)
        for i, (p, q, is_bid) in enumerate(entries)
    ]
    portfolio = Portfolio(cash=cash, shares=shares, wapp=14)
    kept, cancels = enforce_budget(orders, portfolio)
    assert_feasible(orders, portfolio, kept, cancels)
