"""Three-layer panel data model and JSONL/CSV persistence.

Layer 1 holds actions and market outcomes, layer 2 the forecast term
structure with realized errors, layer 3 the raw reasoning text. Missing
values (forfeited turns, horizons past the final round) are explicit
nulls, never sentinel zeros.
"""

import json
from dataclasses import asdict, dataclass
from decimal import Decimal
from pathlib import Path
from typing import Optional

from .errors import SchemaVersionError

SCHEMA_VERSION = "bubblelab/1"


@dataclass
class RoundRecord:
    sim: int
    period: int
    price: int  # reported price (clearing, midpoint, or carried forward)
    crossed: bool
    volume: int
    dividend: str
    bid_orders: int
    ask_orders: int
    bid_shares: int
    ask_shares: int


@dataclass
class AgentRoundRecord:
    sim: int
    agent: str
    period: int
    submitted_buy_orders: int
    submitted_sell_orders: int
    submitted_buy_shares: int
    submitted_sell_shares: int
    enforced_buy_orders: int
    enforced_sell_orders: int
    enforced_buy_shares: int
    enforced_sell_shares: int
    executed_buy_shares: int
    executed_sell_shares: int
    executed_buy_cash: str
    executed_sell_cash: str
    cash: str  # end-of-round
    shares: int
    wapp: str
    portfolio_value: str  # cash + shares * reported price
    buy_dummy: int  # net buyer on executed shares
    sell_dummy: int  # more submitted sell orders than buy orders
    gain_dummy: int  # prior reported price above WAPP at start of round
    forfeited: bool = False


@dataclass
class ForecastRecord:
    sim: int
    agent: str
    period: int
    horizon: int
    forecast: int
    price_at_forecast: int  # reported price when the forecast was formed
    realized: Optional[int] = None  # price at period+horizon, when within the run
    error: Optional[int] = None  # realized - forecast
    implied_return: Optional[float] = None  # (forecast - price_at_forecast)/price_at_forecast


@dataclass
class ReasoningRecord:
    sim: int
    agent: str
    period: int
    plans: str
    insights: str
    market_analysis: str
    strategy: str


LAYER_TYPES = {
    "rounds": RoundRecord,
    "agent_rounds": AgentRoundRecord,
    "forecasts": ForecastRecord,
    "reasoning": ReasoningRecord,
}


def derive_dummies(
    submitted_buy_orders: int,
    submitted_sell_orders: int,
    executed_net_shares: int,
    prior_price: int,
    wapp: Decimal,
) -> tuple[int, int, int]:
    """(buy_dummy, sell_dummy, gain_dummy) per the panel definitions."""
    buy_dummy = 1 if executed_net_shares > 0 else 0
    sell_dummy = 1 if submitted_sell_orders > submitted_buy_orders else 0
    gain_dummy = 1 if prior_price > wapp else 0
    return buy_dummy, sell_dummy, gain_dummy


def write_jsonl(path: Path, records: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema": SCHEMA_VERSION}) + "\n")
        for record in records:
            fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")


def read_jsonl(path: Path, record_type) -> list:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        found = header.get("schema")
        if found != SCHEMA_VERSION:
            raise SchemaVersionError(SCHEMA_VERSION, found)
        return [record_type(**json.loads(line)) for line in fh if line.strip()]


def forecasts_to_csv(records: list[ForecastRecord], path: Path) -> None:
    """Documented stable layout: sim, agent, t, h, f, realized, error."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sim,agent,t,h,f,realized,error\n")
        for r in records:
            realized = "" if r.realized is None else r.realized
            error = "" if r.error is None else r.error
            fh.write(f"{r.sim},{r.agent},{r.period},{r.horizon},{r.forecast},{realized},{error}\n")
