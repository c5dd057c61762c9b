"""LLM-backed agent plumbing: transport, reply validation, forecast scoring.

The transport speaks a chat-completion-style JSON-over-HTTP protocol; a
registry of mock backends stands in for live endpoints in tests. Replies
that fail structural validation forfeit the turn after one repair
attempt, mirroring the engine's rule enforcement.
"""

import json
import os
import time
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Optional

import httpx

from .agents import HORIZONS, AgentDecision, AgentObservation
from .errors import ConfigError
from .fixedpoint import money
from .orders import LimitOrder, Side
from .params import MarketParams
from .prompts import FORFEIT_MESSAGE, PromptBundle, ShockSpec, build_prompts

# Forecast upper bounds as multiples of the current reported price.
NEAR_HORIZONS = (0, 2)
DEFAULT_NEAR_BOUND = 2.0
DEFAULT_FAR_BOUND = 4.0


@dataclass(frozen=True)
class ForecastBound:
    horizon: int
    lower: int
    upper: int


def forecast_bound(
    horizon: int,
    current_price: int,
    near_multiple: float = DEFAULT_NEAR_BOUND,
    far_multiple: float = DEFAULT_FAR_BOUND,
) -> ForecastBound:
    multiple = near_multiple if horizon in NEAR_HORIZONS else far_multiple
    return ForecastBound(horizon=horizon, lower=0, upper=int(multiple * current_price))


@dataclass
class RawModelReply:
    text: str
    model_id: str
    latency: float = 0.0
    attempt: int = 1


@dataclass(frozen=True)
class TurnForfeited:
    reason: str  # "parse" | "bounds" | "transport"
    message: str
    attempt: int = 1


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str  # HTTP URL, or "mock:<backend-name>"
    model: str = "mock"
    api_key_env: str = "BUBBLELAB_API_KEY"
    timeout: float = 60.0
    max_transport_retries: int = 3
    backoff_base: float = 0.5
    repair_attempts: int = 1  # re-prompts after a malformed reply
    near_bound_multiple: float = DEFAULT_NEAR_BOUND
    far_bound_multiple: float = DEFAULT_FAR_BOUND

    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")


class TransportError(Exception):
    pass


class ReplyValidationError(Exception):
    pass


_HORIZON_KEYS = {
    "period_t": 0,
    "period_t_plus_2": 2,
    "period_t_plus_5": 5,
    "period_t_plus_10": 10,
}


def _require_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ReplyValidationError(f"{what} must be an integer, got {value!r}")
    return value


def _require_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise ReplyValidationError(f"{what} must be a string")
    return value


def parse_reply(
    raw: RawModelReply,
    current_price: int,
    near_multiple: float = DEFAULT_NEAR_BOUND,
    far_multiple: float = DEFAULT_FAR_BOUND,
) -> AgentDecision:
    """Strictly parse one structured reply; raises ReplyValidationError."""
    try:
        payload = json.loads(raw.text)
    except json.JSONDecodeError as exc:
        raise ReplyValidationError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ReplyValidationError("reply is not a JSON object")

    cognitive = payload.get("cognitive_process")
    if not isinstance(cognitive, dict):
        raise ReplyValidationError("missing cognitive_process object")
    analysis = _require_str(cognitive.get("market_analysis", ""), "market_analysis")
    strategy = _require_str(cognitive.get("strategy_formulation", ""), "strategy_formulation")

    forecasts_raw = payload.get("price_forecasts")
    if not isinstance(forecasts_raw, dict):
        raise ReplyValidationError("missing price_forecasts object")
    forecasts: dict[int, int] = {}
    for key, horizon in _HORIZON_KEYS.items():
        if key not in forecasts_raw:
            raise ReplyValidationError(f"missing forecast field {key}")
        value = _require_int(forecasts_raw[key], f"forecast {key}")
        bound = forecast_bound(horizon, current_price, near_multiple, far_multiple)
        if value < bound.lower or value > bound.upper:
            raise ReplyValidationError(
                f"forecast {key}={value} outside [{bound.lower}, {bound.upper}]"
            )
        forecasts[horizon] = value

    orders_raw = payload.get("orders")
    if not isinstance(orders_raw, list):
        raise ReplyValidationError("missing orders list")
    orders = []
    for i, entry in enumerate(orders_raw):
        if not isinstance(entry, dict):
            raise ReplyValidationError(f"order {i} is not an object")
        side = entry.get("type")
        if side not in ("BUY", "SELL"):
            raise ReplyValidationError(f"order {i} type must be 'BUY' or 'SELL'")
        price = _require_int(entry.get("price"), f"order {i} price")
        quantity = _require_int(entry.get("quantity"), f"order {i} quantity")
        if price < 1 or quantity < 1:
            raise ReplyValidationError(f"order {i} price/quantity must be positive")
        orders.append(LimitOrder("", Side(side), price, quantity, seq=i))

    memory = payload.get("memory_update")
    if not isinstance(memory, dict):
        raise ReplyValidationError("missing memory_update object")
    plans = _require_str(memory.get("update_plans_txt", ""), "update_plans_txt")
    insights = _require_str(memory.get("update_insights_txt", ""), "update_insights_txt")

    return AgentDecision(
        forecasts=forecasts,
        orders=orders,
        market_analysis=analysis,
        strategy_formulation=strategy,
        memory_plans=plans,
        memory_insights=insights,
    )


def validate_reply(
    raw: RawModelReply,
    current_price: int,
    near_multiple: float = DEFAULT_NEAR_BOUND,
    far_multiple: float = DEFAULT_FAR_BOUND,
):
    """Parse a reply, returning either an AgentDecision or a TurnForfeited."""
    try:
        return parse_reply(raw, current_price, near_multiple, far_multiple)
    except ReplyValidationError as exc:
        reason = "bounds" if "outside" in str(exc) else "parse"
        return TurnForfeited(reason=reason, message=FORFEIT_MESSAGE, attempt=raw.attempt)


# --- transport -------------------------------------------------------------

MockBackend = Callable[[PromptBundle, int], str]
_MOCK_BACKENDS: dict[str, MockBackend] = {}


def register_mock_backend(name: str, backend: MockBackend) -> None:
    _MOCK_BACKENDS[name] = backend


def _fundamentalist_json(bundle: PromptBundle, attempt: int) -> str:
    return json.dumps({
        "cognitive_process": {
            "market_analysis": "Price should track the fundamental value of 14.",
            "strategy_formulation": "Quote around 14: buy at 13, sell at 15.",
        },
        "price_forecasts": {
            "period_t": 14, "period_t_plus_2": 14,
            "period_t_plus_5": 14, "period_t_plus_10": 14,
        },
        "orders": [
            {"type": "BUY", "price": 13, "quantity": 2},
            {"type": "SELL", "price": 15, "quantity": 2},
        ],
        "memory_update": {
            "update_plans_txt": "Keep quoting around fundamental value.",
            "update_insights_txt": "Fundamental value is constant at 14.",
        },
    })


def _malformed_once(bundle: PromptBundle, attempt: int) -> str:
    if attempt <= 1:
        return "I think I'll buy"
    return _fundamentalist_json(bundle, attempt)


register_mock_backend("fundamentalist-json", _fundamentalist_json)
register_mock_backend("malformed-once", _malformed_once)


def transport(
    bundle: PromptBundle,
    model_config: ModelConfig,
    attempt: int = 1,
    sleep=time.sleep,
) -> RawModelReply:
    """Issue one chat request (with transport-level retries) and return the raw reply."""
    if model_config.is_mock():
        name = model_config.endpoint.split(":", 1)[1]
        if name not in _MOCK_BACKENDS:
            raise ConfigError(f"unknown mock backend: {name!r}")
        start = time.monotonic()
        text = _MOCK_BACKENDS[name](bundle, attempt)
        return RawModelReply(text=text, model_id=model_config.model,
                             latency=time.monotonic() - start, attempt=attempt)

    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(model_config.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {"model": model_config.model, "messages": bundle.messages()}

    last_error = None
    for retry in range(model_config.max_transport_retries):
        start = time.monotonic()
        try:
            response = httpx.post(
                model_config.endpoint, json=body, headers=headers,
                timeout=model_config.timeout,
            )
            response.raise_for_status()
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
            return RawModelReply(text=text, model_id=model_config.model,
                                 latency=time.monotonic() - start, attempt=attempt)
        except (httpx.HTTPError, KeyError, IndexError, json.JSONDecodeError) as exc:
            last_error = exc
            if retry < model_config.max_transport_retries - 1:
                sleep(model_config.backoff_base * (2 ** retry))
    raise TransportError(f"model endpoint failed after retries: {last_error}")


class LLMAgent:
    """Agent backed by a chat model; holds the repair loop and shock clause."""

    def __init__(
        self,
        agent_id: str,
        model_config: ModelConfig,
        params: MarketParams,
        shock: Optional[ShockSpec] = None,
    ):
        self.agent_id = agent_id
        self.model_config = model_config
        self.params = params
        self.shock = shock

    def decide(self, observation: AgentObservation, rng=None):
        bundle = build_prompts(observation, self.params, self.shock)
        max_attempts = 1 + self.model_config.repair_attempts
        result = None
        for attempt in range(1, max_attempts + 1):
            try:
                raw = transport(bundle, self.model_config, attempt=attempt)
            except TransportError as exc:
                return TurnForfeited(reason="transport", message=str(exc), attempt=attempt)
            result = validate_reply(
                raw, observation.current_price,
                self.model_config.near_bound_multiple,
                self.model_config.far_bound_multiple,
            )
            if isinstance(result, AgentDecision):
                return result
        return result


# --- forecast scoring -------------------------------------------------------


@dataclass(frozen=True)
class BonusEntry:
    agent_id: str
    period: int
    horizon: int
    forecast: int
    realized: int
    awarded: Decimal


def score_forecasts(
    forecasts: list[tuple[str, int, int, int]],
    realized_prices: dict[int, int],
    params: MarketParams,
) -> list[BonusEntry]:
    """Score recorded (agent, period, horizon, forecast) rows after the run.

    A forecast earns the reward iff its target period lies within the main
    horizon and the absolute error is within the tolerance (inclusive).
    """
    entries = []
    for agent_id, period, horizon, forecast in forecasts:
        target = period + horizon
        if period < 1 or target > params.main_periods or target not in realized_prices:
            continue
        realized = realized_prices[target]
        error = abs(Decimal(realized) - Decimal(forecast))
        awarded = params.forecast_reward if error <= params.forecast_tolerance else money(0)
        entries.append(BonusEntry(agent_id, period, horizon, forecast, realized, money(awarded)))
    return entries
