"""Agent interface and scripted behavioral agents.

The scripted agents are ground-truth generators: each implements one
documented trading pattern (fundamental anchoring, return extrapolation,
disposition-driven selling, momentum chasing, seeded noise) with known
parameters, so the analytics layer can be tested against planted effects.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .orders import LimitOrder, Portfolio, Side
from .params import MarketParams

HORIZONS = (0, 2, 5, 10)

# Fraction of cash (buys) or shares (sells) a scripted agent risks per round.
ORDER_RISK_FRACTION = 0.5

SCRIPTED_KINDS = ("Fundamentalist", "Extrapolator", "Disposition", "Momentum", "Noise")


@dataclass(frozen=True)
class PriceObservation:
    period: int
    price: int
    volume: int
    dividend: str  # dividend drawn at the end of the period, as a decimal string


@dataclass
class AgentObservation:
    period: int  # practice periods are -2, -1, 0; main periods 1..T
    portfolio: Portfolio
    price_history: list[PriceObservation]
    own_trades: list[dict]
    memory_plans: str
    memory_insights: str
    current_price: int
    params: MarketParams
    forfeit_notice: Optional[str] = None
    reflection_requested: bool = False


@dataclass
class AgentDecision:
    forecasts: dict[int, int]  # horizon -> non-negative integer price
    orders: list[LimitOrder]
    market_analysis: str = ""
    strategy_formulation: str = ""
    memory_plans: str = ""
    memory_insights: str = ""


@dataclass(frozen=True)
class ScriptedAgentConfig:
    kind: str
    extrapolation_weights: tuple = (0.3, 0.2, 0.1, 0.05)
    horizon_multipliers: tuple = ((0, 1.0), (2, 1.5), (5, 2.0), (10, 3.0))
    disposition_sell_boost: float = 0.0
    base_sell_prob: float = 0.35
    noise_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in SCRIPTED_KINDS:
            raise ConfigError(f"unknown scripted agent kind: {self.kind!r}")
        if not all(math.isfinite(w) for w in self.extrapolation_weights):
            raise ConfigError("extrapolation weights must be finite")
        if not (0.0 <= self.disposition_sell_boost <= 1.0 and 0.0 <= self.base_sell_prob <= 1.0):
            raise ConfigError("sell probabilities must lie in [0, 1]")

    def multiplier(self, horizon: int) -> float:
        return dict(self.horizon_multipliers).get(horizon, 1.0)


def lagged_returns(history: list[PriceObservation], n_lags: int) -> list[float]:
    """Simple net returns, most recent first; missing lags are zero."""
    prices = [h.price for h in history]
    returns = []
    for k in range(n_lags):
        if len(prices) >= k + 2 and prices[-k - 2] > 0:
            returns.append((prices[-k - 1] - prices[-k - 2]) / prices[-k - 2])
        else:
            returns.append(0.0)
    return returns


def extrapolation_signal(history, weights) -> float:
    returns = lagged_returns(history, len(weights))
    return sum(w * r for w, r in zip(weights, returns))


def _buy_quantity(portfolio: Portfolio, price: int) -> int:
    return int(float(portfolio.cash) * ORDER_RISK_FRACTION // price)


def _sell_quantity(portfolio: Portfolio) -> int:
    return int(portfolio.shares * ORDER_RISK_FRACTION)


def _reasoning(direction: int, price: int, quantity: int) -> tuple[str, str, str, str]:
    """Small keyworded templates so stated-action extraction has a scripted oracle."""
    if direction > 0:
        analysis = f"The market looks attractive near {price}; demand should firm up."
        strategy = f"Submit a buy order for {quantity} shares at {price}."
        plans = f"Plan to buy around {price} and accumulate shares while momentum holds."
        insights = f"Buying near {price} has been working; stay long."
    elif direction < 0:
        analysis = f"The market looks stretched near {price}; supply should build."
        strategy = f"Submit a sell order for {quantity} shares at {price}."
        plans = f"Plan to sell into strength near {price} and reduce exposure."
        insights = f"Better to liquidate gradually; selling near {price} locks in value."
    else:
        analysis = f"No clear edge at {price}; holding steady."
        strategy = "Hold current position and observe another round."
        plans = "Hold and wait for clearer conditions."
        insights = "Patience; the market is close to fair value."
    return analysis, strategy, plans, insights


def _decision(direction, orders, forecasts, price):
    quantity = orders[0].quantity if orders else 0
    analysis, strategy, plans, insights = _reasoning(direction, price, quantity)
    return AgentDecision(
        forecasts=forecasts,
        orders=orders,
        market_analysis=analysis,
        strategy_formulation=strategy,
        memory_plans=plans,
        memory_insights=insights,
    )


def _fundamentalist(obs: AgentObservation, config, rng) -> AgentDecision:
    fv = int(obs.params.fundamental_value())
    forecasts = {h: fv for h in HORIZONS}
    orders = []
    bid, ask = fv - 1, fv + 1
    qty_buy = _buy_quantity(obs.portfolio, bid)
    if qty_buy >= 1:
        orders.append(LimitOrder(agent_id="", side=Side.BUY, price=bid, quantity=qty_buy, seq=0))
    qty_sell = _sell_quantity(obs.portfolio)
    if qty_sell >= 1:
        orders.append(LimitOrder(agent_id="", side=Side.SELL, price=ask, quantity=qty_sell, seq=1))
    return _decision(0, orders, forecasts, obs.current_price)


def _extrapolator(obs: AgentObservation, config, rng) -> AgentDecision:
    p = obs.current_price
    weights = config.extrapolation_weights
    signal = extrapolation_signal(obs.price_history, weights)
    forecasts = {
        h: max(0, round(p * (1.0 + config.multiplier(h) * signal))) for h in HORIZONS
    }

    # Orders trade toward the same signal the forecasts encode, so stated
    # expectations and subsequent trading stay coupled.
    jitter = int(rng.integers(-1, 2)) if config.noise_scale > 0 else 0
    orders = []
    direction = 0
    if signal > 0:
        direction = 1
        limit = max(1, round(p * (1.0 + config.multiplier(0) * signal)) + jitter)
        qty = _buy_quantity(obs.portfolio, limit)
        if qty >= 1:
            orders.append(LimitOrder("", Side.BUY, limit, qty, seq=0))
    elif signal < 0:
        direction = -1
        limit = max(1, min(p - 1, round(p * (1.0 + config.multiplier(0) * signal))) + jitter)
        qty = _sell_quantity(obs.portfolio)
        if qty >= 1:
            orders.append(LimitOrder("", Side.SELL, limit, qty, seq=0))
    return _decision(direction, orders, forecasts, p)


def _disposition(obs: AgentObservation, config, rng) -> AgentDecision:
    p = obs.current_price
    in_gain = p > obs.portfolio.wapp
    sell_prob = config.base_sell_prob + (config.disposition_sell_boost if in_gain else 0.0)
    jitter = int(round(rng.normal(0.0, config.noise_scale)))
    forecasts = {h: max(0, p + jitter) for h in HORIZONS}
    orders = []
    if rng.random() < sell_prob:
        direction = -1
        if obs.portfolio.shares >= 1:
            limit = max(1, p - 1 + int(rng.integers(0, 2)))
            orders.append(LimitOrder("", Side.SELL, limit, 1, seq=0))
    else:
        direction = 1
        limit = max(1, p + 1 - int(rng.integers(0, 2)))
        if obs.portfolio.cash >= limit:
            orders.append(LimitOrder("", Side.BUY, limit, 1, seq=0))
    return _decision(direction, orders, forecasts, p)


def _momentum(obs: AgentObservation, config, rng) -> AgentDecision:
    p = obs.current_price
    r1 = lagged_returns(obs.price_history, 1)[0]
    forecasts = {h: max(0, round(p * (1.0 + r1))) for h in HORIZONS}
    orders = []
    direction = 0
    if r1 > 0:
        direction = 1
        qty = _buy_quantity(obs.portfolio, p + 1)
        if qty >= 1:
            orders.append(LimitOrder("", Side.BUY, p + 1, qty, seq=0))
    elif r1 < 0:
        direction = -1
        qty = _sell_quantity(obs.portfolio)
        if qty >= 1:
            orders.append(LimitOrder("", Side.SELL, max(1, p - 1), qty, seq=0))
    return _decision(direction, orders, forecasts, p)


def _noise(obs: AgentObservation, config, rng) -> AgentDecision:
    fv = int(obs.params.fundamental_value())
    p = obs.current_price
    scale = config.noise_scale
    # Forecasts are pure noise around the current price, deliberately
    # carrying no information about this agent's own order flow.
    forecasts = {
        h: max(0, p + int(round(rng.normal(0.0, scale)))) for h in HORIZONS
    }
    bid = max(1, fv - 1 + int(round(rng.normal(0.0, scale))))
    ask = max(1, fv + 1 + int(round(rng.normal(0.0, scale))))
    orders = []
    qty_buy = min(2, _buy_quantity(obs.portfolio, bid))
    if qty_buy >= 1:
        orders.append(LimitOrder("", Side.BUY, bid, qty_buy, seq=0))
    if obs.portfolio.shares >= 1:
        orders.append(LimitOrder("", Side.SELL, ask, min(2, obs.portfolio.shares), seq=1))
    return _decision(0, orders, forecasts, p)


_DECIDERS = {
    "Fundamentalist": _fundamentalist,
    "Extrapolator": _extrapolator,
    "Disposition": _disposition,
    "Momentum": _momentum,
    "Noise": _noise,
}


def decide(
    observation: AgentObservation,
    config: ScriptedAgentConfig,
    rng: Optional[np.random.Generator] = None,
) -> AgentDecision:
    """Scripted decision rule; deterministic given (observation, config, rng seed).

    Orders come back pre-enforcement with blank agent ids; the session
    assigns ids and applies budget constraints downstream.
    """
    if rng is None:
        rng = np.random.default_rng([config.rng_seed, observation.period + 1000])
    return _DECIDERS[config.kind](observation, config, rng)


class ScriptedAgent:
    """Stateless wrapper binding a config to the agent protocol."""

    def __init__(self, agent_id: str, config: ScriptedAgentConfig):
        self.agent_id = agent_id
        self.config = config

    def decide(self, observation: AgentObservation, rng=None) -> AgentDecision:
        return decide(observation, self.config, rng)
