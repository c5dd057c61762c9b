"""Order, book, fill and portfolio value types."""

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Optional

from .errors import ConfigError
from .fixedpoint import ZERO, money


class Side(str, Enum):
    BUY = "BUY"
    SELL = "SELL"


@dataclass(frozen=True, order=True)
class LimitOrder:
    agent_id: str
    side: Side
    price: int  # integer cash units per share
    quantity: int  # shares
    seq: int = 0  # submission ordinal within (agent, round)

    def __post_init__(self):
        if self.price < 1:
            raise ConfigError(f"order price must be >= 1, got {self.price}")
        if self.quantity < 1:
            raise ConfigError(f"order quantity must be >= 1, got {self.quantity}")


@dataclass
class OrderBook:
    round: int
    bids: list[LimitOrder] = field(default_factory=list)
    asks: list[LimitOrder] = field(default_factory=list)

    def __post_init__(self):
        assert all(o.side is Side.BUY for o in self.bids)
        assert all(o.side is Side.SELL for o in self.asks)


@dataclass(frozen=True)
class Fill:
    buyer_id: str
    seller_id: str
    price: int  # always the clearing price
    quantity: int


@dataclass
class ClearingOutcome:
    crossed: bool
    price: Optional[int]  # clearing price if crossed, midpoint if not, None if undefined
    volume: int
    fills: list[Fill] = field(default_factory=list)
    # (price, Q_B, Q_A, V) per candidate, for audit
    candidate_diagnostics: Optional[list[tuple[int, int, int, int]]] = None


@dataclass(frozen=True)
class Cancellation:
    """Record of an order removed or reduced by budget enforcement."""

    order: LimitOrder
    quantity_removed: int
    reason: str  # "margin" or "short"


@dataclass
class Portfolio:
    cash: Decimal
    shares: int
    wapp: Decimal  # quantity-weighted average purchase price
    forecast_bonus_accrued: Decimal = ZERO

    def __post_init__(self):
        self.cash = money(self.cash)
        self.wapp = money(self.wapp)
        self.forecast_bonus_accrued = money(self.forecast_bonus_accrued)

    def value_at(self, price: int) -> Decimal:
        return money(self.cash + self.shares * price)

    def copy(self) -> "Portfolio":
        return Portfolio(self.cash, self.shares, self.wapp, self.forecast_bonus_accrued)
