"""Round settlement arithmetic, conservation, and WAPP updates."""

from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from bubblelab import Fill, MarketParams, Portfolio, settle_round, terminal_settlement
from bubblelab.errors import InvariantViolation
from bubblelab.fixedpoint import money

PARAMS = MarketParams()


def test_purchase_updates_wapp_and_cash():
    portfolios = {
        "buyer": Portfolio(cash=100, shares=4, wapp=14),
        "seller": Portfolio(cash=100, shares=4, wapp=14),
    }
    fills = [Fill(buyer_id="buyer", seller_id="seller", price=20, quantity=2)]
    ledger = settle_round(portfolios, fills, Decimal("0.4"), PARAMS, period=1)

    buyer = portfolios["buyer"]
    # 100 - 40 trade, +3 interest on 60, +2.4 dividend on 6 shares.
    assert buyer.cash == Decimal("65.4")
    assert buyer.shares == 6
    assert buyer.wapp == Decimal("16")  # (4*14 + 2*20) / 6

    seller = portfolios["seller"]
    # 100 + 40 trade, +7 interest, +0.8 dividend on 2 shares.
    assert seller.cash == Decimal("147.8")
    assert seller.shares == 2
    assert seller.wapp == Decimal("14")  # liquidations leave WAPP unchanged

    assert sum(ledger.trade_cash.values()) == 0
    assert sum(ledger.trade_shares.values()) == 0


def test_interest_only():
    portfolios = {"a": Portfolio(cash=100, shares=0, wapp=14)}
    settle_round(portfolios, [], Decimal("1.0"), PARAMS)
    assert portfolios["a"].cash == Decimal("105")


def test_dividend_only():
    portfolios = {"a": Portfolio(cash=0, shares=4, wapp=14)}
    settle_round(portfolios, [], Decimal("0.4"), PARAMS)
    assert portfolios["a"].cash == Decimal("1.6")
    assert portfolios["a"].shares == 4


def test_negative_shares_rejected():
    portfolios = {
        "buyer": Portfolio(cash=100, shares=0, wapp=14),
        "seller": Portfolio(cash=100, shares=0, wapp=14),
    }
    with pytest.raises(InvariantViolation):
        settle_round(portfolios, [Fill("buyer", "seller", 10, 1)], Decimal("0.4"), PARAMS)


def test_terminal_settlement_example():
    portfolios = {"a": Portfolio(cash=50, shares=4, wapp=14, forecast_bonus_accrued=15)}
    wealth = terminal_settlement(portfolios, PARAMS)
    assert wealth["a"] == Decimal("121")  # 50 + 4*14 + 15
    assert portfolios["a"].shares == 0


def test_terminal_settlement_no_shares():
    portfolios = {"a": Portfolio(cash=10, shares=0, wapp=14)}
    assert terminal_settlement(portfolios, PARAMS)["a"] == Decimal("10")


@given(
    st.integers(min_value=1, max_value=40),
    st.integers(min_value=1, max_value=10),
    st.integers(min_value=0, max_value=10),
    st.integers(min_value=1, max_value=40),
)
def test_wapp_bounds_property(price, quantity, old_shares, old_wapp):
    buyer = Portfolio(cash=price * quantity, shares=old_shares, wapp=old_wapp)
    seller = Portfolio(cash=0, shares=quantity, wapp=14)
    portfolios = {"b": buyer, "s": seller}
    settle_round(portfolios, [Fill("b", "s", price, quantity)], Decimal("0.4"), PARAMS)
    low = min(money(old_wapp), money(price))
    high = max(money(old_wapp), money(price))
    assert low <= buyer.wapp <= high


@given(st.lists(
    st.tuples(st.integers(min_value=1, max_value=30), st.integers(min_value=1, max_value=4)),
    min_size=0, max_size=6,
))
def test_zero_sum_trading_property(trades):
    agents = [f"a{i}" for i in range(5)]
    portfolios = {
        a: Portfolio(cash=10_000, shares=100, wapp=14) for a in agents
    }
    fills = [
        Fill(agents[i % 5], agents[(i + 1) % 5], price, quantity)
        for i, (price, quantity) in enumerate(trades)
    ]
    ledger = settle_round(portfolios, fills, Decimal("1.0"), PARAMS)
    assert sum(ledger.trade_cash.values()) == 0
    assert sum(ledger.trade_shares.values()) == 0
