"""Market environment parameters and the fundamental-value benchmark."""

from dataclasses import dataclass
from decimal import Decimal

from .errors import ConfigError
from .fixedpoint import money


@dataclass(frozen=True)
class MarketParams:
    """Economic environment of one experimental market."""

    interest_rate: Decimal = Decimal("0.05")
    dividend_low: Decimal = Decimal("0.4")
    dividend_high: Decimal = Decimal("1.0")
    dividend_prob_high: Decimal = Decimal("0.5")
    main_periods: int = 20
    practice_periods: int = 3
    buyout_value: Decimal = Decimal("14")
    initial_cash: Decimal = Decimal("100")
    initial_shares: int = 4
    forecast_reward: Decimal = Decimal("5")
    forecast_tolerance: Decimal = Decimal("2.5")

    def __post_init__(self):
        if self.interest_rate <= 0:
            raise ConfigError("interest_rate must be positive")
        if not self.dividend_low < self.dividend_high:
            raise ConfigError("dividend_low must be below dividend_high")
        if not (0 <= self.dividend_prob_high <= 1):
            raise ConfigError("dividend_prob_high must be a probability")
        for name in ("main_periods", "practice_periods", "initial_shares"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    def expected_dividend(self) -> Decimal:
        p = self.dividend_prob_high
        return p * self.dividend_high + (1 - p) * self.dividend_low

    def fundamental_value(self) -> Decimal:
        return self.expected_dividend() / self.interest_rate

    @classmethod
    def from_dict(cls, raw: dict) -> "MarketParams":
        kwargs = {}
        for name, value in raw.items():
            if name not in cls.__dataclass_fields__:
                raise ConfigError(f"unknown market parameter: {name}")
            field_type = cls.__dataclass_fields__[name].type
            kwargs[name] = int(value) if field_type == "int" else money(value)
        return cls(**kwargs)


def fundamental_value(params: MarketParams) -> Decimal:
    """Present value of the expected dividend perpetuity at the risk-free rate."""
    return params.fundamental_value()
