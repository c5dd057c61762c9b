"""Deterministic laboratory for multi-period experimental asset markets."""

from .params import MarketParams, fundamental_value
from .orders import LimitOrder, OrderBook, ClearingOutcome, Fill, Portfolio, Side
from .clearing import clear, candidate_prices, cumulative_demand, cumulative_supply, allocate_fills
from .budget import enforce_budget
from .settlement import settle_round, terminal_settlement
from .agents import AgentDecision, AgentObservation, ScriptedAgent, ScriptedAgentConfig
from .session import SessionConfig, run_session, dividend_draw

__all__ = [
    "MarketParams", "fundamental_value",
    "LimitOrder", "OrderBook", "ClearingOutcome", "Fill", "Portfolio", "Side",
    "clear", "candidate_prices", "cumulative_demand", "cumulative_supply", "allocate_fills",
    "enforce_budget", "settle_round", "terminal_settlement",
    "AgentDecision", "AgentObservation", "ScriptedAgent", "ScriptedAgentConfig",
    "SessionConfig", "run_session", "dividend_draw",
]

__version__ = "0.1.0"
