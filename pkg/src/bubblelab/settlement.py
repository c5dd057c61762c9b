"""End-of-round settlement: trades, interest, dividends, terminal buyout."""

from dataclasses import dataclass, field
from decimal import Decimal

from .errors import InvariantViolation
from .fixedpoint import ZERO, money
from .orders import Fill, Portfolio
from .params import MarketParams


@dataclass
class RoundLedger:
    """Per-agent cash components of one round, recorded for conservation audits."""

    period: int
    dividend: Decimal
    trade_cash: dict[str, Decimal] = field(default_factory=dict)
    trade_shares: dict[str, int] = field(default_factory=dict)
    interest: dict[str, Decimal] = field(default_factory=dict)
    dividends: dict[str, Decimal] = field(default_factory=dict)


def settle_round(
    portfolios: dict[str, Portfolio],
    fills: list[Fill],
    dividend_draw: Decimal,
    params: MarketParams,
    period: int = 0,
) -> RoundLedger:
    """Apply fills, then interest on post-trade cash, then the dividend.

    Mutates portfolios in place. WAPP updates on purchases as the
    quantity-weighted average of the prior WAPP and the trade price;
    liquidations leave WAPP unchanged.
    """
    ledger = RoundLedger(period=period, dividend=dividend_draw)
    for agent in portfolios:
        ledger.trade_cash[agent] = ZERO
        ledger.trade_shares[agent] = 0

    for fill in fills:
        amount = money(fill.price * fill.quantity)
        buyer = portfolios[fill.buyer_id]
        seller = portfolios[fill.seller_id]
        new_shares = buyer.shares + fill.quantity
        buyer.wapp = money(
            (buyer.wapp * buyer.shares + fill.price * fill.quantity) / new_shares
        )
        buyer.cash = money(buyer.cash - amount)
        buyer.shares = new_shares
        seller.cash = money(seller.cash + amount)
        seller.shares -= fill.quantity
        ledger.trade_cash[fill.buyer_id] = money(ledger.trade_cash[fill.buyer_id] - amount)
        ledger.trade_cash[fill.seller_id] = money(ledger.trade_cash[fill.seller_id] + amount)
        ledger.trade_shares[fill.buyer_id] += fill.quantity
        ledger.trade_shares[fill.seller_id] -= fill.quantity

    for agent, pf in portfolios.items():
        if pf.cash < 0 or pf.shares < 0:
            raise InvariantViolation(
                f"agent {agent} has negative cash or shares after trades: "
                f"cash={pf.cash} shares={pf.shares}"
            )
        interest = money(pf.cash * params.interest_rate)
        dividend = money(pf.shares * dividend_draw)
        pf.cash = money(pf.cash + interest + dividend)
        ledger.interest[agent] = interest
        ledger.dividends[agent] = dividend

    return ledger


def terminal_settlement(
    portfolios: dict[str, Portfolio], params: MarketParams
) -> dict[str, Decimal]:
    """Redeem all shares at the buyout value, pay forecast bonuses, return final wealth."""
    wealth = {}
    for agent, pf in portfolios.items():
        pf.cash = money(pf.cash + pf.shares * params.buyout_value + pf.forecast_bonus_accrued)
        pf.shares = 0
        wealth[agent] = pf.cash
    return wealth
