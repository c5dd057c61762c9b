"""Volume-maximizing uniform-price call auction.

All orders for a round are batched and cleared at the single price that
maximizes executable volume over the candidate grid of quoted prices.
Ties go to the candidate minimizing the demand/supply imbalance, then to
the lowest price, so the outcome is deterministic for a given book.
"""

from .errors import InvariantViolation
from .orders import ClearingOutcome, Fill, OrderBook


def candidate_prices(book: OrderBook) -> list[int]:
    """Distinct quoted prices across both sides, ascending."""
    return sorted({o.price for o in book.bids} | {o.price for o in book.asks})


def cumulative_demand(book: OrderBook, p: int) -> int:
    """Shares buyers are willing to purchase at price p (bids priced >= p)."""
    return sum(o.quantity for o in book.bids if o.price >= p)


def cumulative_supply(book: OrderBook, p: int) -> int:
    """Shares sellers are willing to part with at price p (asks priced <= p)."""
    return sum(o.quantity for o in book.asks if o.price <= p)


def clear(book: OrderBook) -> ClearingOutcome:
    """Clear a post-enforcement book at the volume-maximizing uniform price.

    If the book does not cross, no trades occur and the reported price is
    the floor of the bid-ask midpoint; with one or both sides empty the
    price is None and the caller carries forward the previous price.
    """
    candidates = candidate_prices(book)
    diagnostics = []
    best = None  # (price, volume, imbalance)
    for p in candidates:
        q_b = cumulative_demand(book, p)
        q_a = cumulative_supply(book, p)
        v = min(q_b, q_a)
        diagnostics.append((p, q_b, q_a, v))
        key = (-v, abs(q_b - q_a), p)
        if best is None or key < best[0]:
            best = (key, p, v)

    if best is not None and best[2] >= 1:
        price, volume = best[1], best[2]
        fills = allocate_fills(book, price, volume)
        return ClearingOutcome(
            crossed=True, price=int(price), volume=volume, fills=fills,
            candidate_diagnostics=diagnostics,
        )

    if book.bids and book.asks:
        midpoint = (max(o.price for o in book.bids) + min(o.price for o in book.asks)) // 2
        return ClearingOutcome(crossed=False, price=midpoint, volume=0,
                               candidate_diagnostics=diagnostics)
    return ClearingOutcome(crossed=False, price=None, volume=0,
                           candidate_diagnostics=diagnostics)


def _executed_quantities(orders, volume: int, aggressive_first) -> list[tuple[str, int]]:
    """Allocate volume over one side: strict price priority, then (agent_id, seq)."""
    queue = sorted(orders, key=lambda o: (aggressive_first(o), o.agent_id, o.seq))
    executed = []
    remaining = volume
    for order in queue:
        if remaining == 0:
            break
        take = min(order.quantity, remaining)
        executed.append((order.agent_id, take))
        remaining -= take
    if remaining != 0:
        raise InvariantViolation(f"could not allocate {remaining} of {volume} shares")
    return executed


def allocate_fills(book: OrderBook, price: int, volume: int) -> list[Fill]:
    """Ration marginal orders at the clearing price and zip sides into bilateral fills."""
    eligible_bids = [o for o in book.bids if o.price >= price]
    eligible_asks = [o for o in book.asks if o.price <= price]
    buys = _executed_quantities(eligible_bids, volume, lambda o: -o.price)
    sells = _executed_quantities(eligible_asks, volume, lambda o: o.price)

    fills = []
    bi = si = 0
    buy_left = sell_left = 0
    buyer = seller = None
    while True:
        if buy_left == 0:
            if bi >= len(buys):
                break
            buyer, buy_left = buys[bi]
            bi += 1
        if sell_left == 0:
            seller, sell_left = sells[si]
            si += 1
        q = min(buy_left, sell_left)
        fills.append(Fill(buyer_id=buyer, seller_id=seller, price=price, quantity=q))
        buy_left -= q
        sell_left -= q

    if sum(f.quantity for f in fills) != volume:
        raise InvariantViolation("executed quantity does not equal clearing volume")
    return fills
