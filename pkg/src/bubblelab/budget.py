"""Per-agent budget enforcement: no short selling, no margin buying.

Runs before orders reach the clearing engine. Excess sell quantity is
removed from the lowest-priced asks first (keeping the highest asks
intact); infeasible buy outlay is resolved by cancelling whole
lowest-priced bids, with a partial quantity reduction on the marginal
bid when that alone restores feasibility.
"""

import math
from dataclasses import replace

from .orders import Cancellation, LimitOrder, Portfolio, Side


def enforce_budget(
    orders: list[LimitOrder], portfolio: Portfolio
) -> tuple[list[LimitOrder], list[Cancellation]]:
    """Trim one agent's orders to its share and cash endowment.

    Always returns a feasible (possibly empty) order list plus a record of
    everything removed. Kept orders come back in submission (seq) order.
    """
    bids = [o for o in orders if o.side is Side.BUY]
    asks = [o for o in orders if o.side is Side.SELL]
    cancellations: list[Cancellation] = []

    # Short-sale constraint: total sell quantity <= shares held. Remove the
    # excess from the lowest ask prices first (later submissions first
    # within a price level); partial quantity reductions allowed.
    excess = sum(o.quantity for o in asks) - portfolio.shares
    if excess > 0:
        kept = []
        for order in sorted(asks, key=lambda o: (o.price, -o.seq)):
            if excess <= 0:
                kept.append(order)
                continue
            removed = min(order.quantity, excess)
            excess -= removed
            cancellations.append(Cancellation(order, removed, "short"))
            if removed < order.quantity:
                kept.append(replace(order, quantity=order.quantity - removed))
        asks = kept

    # Margin constraint: worst-case outlay sum(p*q) <= cash. Cancel whole
    # lowest-priced bids; when a partial reduction of the current lowest
    # bid suffices, reduce its quantity instead of dropping it.
    outlay = sum(o.price * o.quantity for o in bids)
    if outlay > portfolio.cash:
        kept = []
        for order in sorted(bids, key=lambda o: (o.price, -o.seq)):
            if outlay <= portfolio.cash:
                kept.append(order)
                continue
            shortfall = outlay - portfolio.cash
            q_cut = min(order.quantity, math.ceil(shortfall / order.price))
            outlay -= order.price * q_cut
            cancellations.append(Cancellation(order, q_cut, "margin"))
            if q_cut < order.quantity:
                kept.append(replace(order, quantity=order.quantity - q_cut))
        bids = kept

    return sorted(bids + asks, key=lambda o: o.seq), cancellations
