"""Scripted agent decision rules against hand-computed oracles."""

import numpy as np
import pytest

from bubblelab import MarketParams, Portfolio, ScriptedAgentConfig, Side
from bubblelab.agents import (
    AgentObservation,
    PriceObservation,
    decide,
    extrapolation_signal,
    lagged_returns,
)
from bubblelab.errors import ConfigError

PARAMS = MarketParams()


def make_observation(prices, current_price=None, cash=100, shares=4, wapp=14, period=5):
    history = [
        PriceObservation(period=i + 1, price=p, volume=0, dividend="0.4")
        for i, p in enumerate(prices)
    ]
    return AgentObservation(
        period=period,
        portfolio=Portfolio(cash=cash, shares=shares, wapp=wapp),
        price_history=history,
        own_trades=[],
        memory_plans="",
        memory_insights="",
        current_price=current_price if current_price is not None else (prices[-1] if prices else 14),
        params=PARAMS,
    )


class StubRng:
    """Deterministic stand-in exposing the generator methods agents use."""

    def __init__(self, uniform=0.5, normal=0.0, integer=0):
        self._uniform = uniform
        self._normal = normal
        self._integer = integer

    def random(self):
        return self._uniform

    def normal(self, loc, scale):
        return self._normal

    def integers(self, low, high):
        return self._integer


def test_lagged_returns_most_recent_first():
    obs = make_observation([10, 11, 12])
    assert lagged_returns(obs.price_history, 2) == [(12 - 11) / 11, (11 - 10) / 10]


def test_lagged_returns_pad_missing_with_zero():
    obs = make_observation([10])
    assert lagged_returns(obs.price_history, 3) == [0.0, 0.0, 0.0]


def test_fundamentalist_forecasts_fundamental_value():
    obs = make_observation([13, 17, 20])
    decision = decide(obs, ScriptedAgentConfig(kind="Fundamentalist"))
    assert decision.forecasts == {0: 14, 2: 14, 5: 14, 10: 14}


def test_fundamentalist_quotes_straddle_fundamental_value():
    obs = make_observation([14])
    decision = decide(obs, ScriptedAgentConfig(kind="Fundamentalist"))
    sides = {o.side: o.price for o in decision.orders}
    assert sides[Side.BUY] == 13
    assert sides[Side.SELL] == 15


def test_extrapolator_forecast_formula():
    # w=(0.2,0.1), m_10=3, P_t=15, R_{t-1}=0.10, R_{t-2}=0:
    # f(10) = round(15 * (1 + 3 * 0.02)) = 16.
    config = ScriptedAgentConfig(
        kind="Extrapolator", extrapolation_weights=(0.2, 0.1),
        horizon_multipliers=((0, 1.0), (2, 1.5), (5, 2.0), (10, 3.0)),
    )
    obs = make_observation([10, 10, 11], current_price=15)
    assert extrapolation_signal(obs.price_history, (0.2, 0.1)) == pytest.approx(0.02)
    decision = decide(obs, config)
    assert decision.forecasts[10] == 16
    assert decision.forecasts[0] == round(15 * 1.02)


def test_extrapolator_forecast_monotone_in_recent_return():
    config = ScriptedAgentConfig(kind="Extrapolator", extrapolation_weights=(0.3, 0.2))
    low = decide(make_observation([10, 10, 11], current_price=20), config)
    high = decide(make_observation([10, 10, 13], current_price=20), config)
    for h in (0, 2, 5, 10):
        assert high.forecasts[h] >= low.forecasts[h]


def test_extrapolator_sides_follow_signal():
    config = ScriptedAgentConfig(kind="Extrapolator", extrapolation_weights=(0.5,),
                                 noise_scale=0.0)
    up = decide(make_observation([10, 12]), config)
    down = decide(make_observation([12, 10]), config)
    flat = decide(make_observation([10, 10]), config)
    assert {o.side for o in up.orders} == {Side.BUY}
    assert {o.side for o in down.orders} == {Side.SELL}
    assert flat.orders == []


def test_disposition_boost_applies_only_in_gain():
    config = ScriptedAgentConfig(kind="Disposition", disposition_sell_boost=0.3,
                                 base_sell_prob=0.35, noise_scale=0.0)
    gain_obs = make_observation([18], wapp=16)  # price 18 > wapp 16
    loss_obs = make_observation([15], wapp=16)
    # Draw 0.6: below 0.65 (= base + boost) only when in gain.
    in_gain = decide(gain_obs, config, rng=StubRng(uniform=0.6))
    out_of_gain = decide(loss_obs, config, rng=StubRng(uniform=0.6))
    assert {o.side for o in in_gain.orders} == {Side.SELL}
    assert {o.side for o in out_of_gain.orders} == {Side.BUY}


def test_disposition_sell_frequency_matches_probability():
    config = ScriptedAgentConfig(kind="Disposition", disposition_sell_boost=0.3,
                                 base_sell_prob=0.35, noise_scale=0.0)
    obs = make_observation([18], wapp=16)
    rng = np.random.default_rng(0)
    sells = sum(
        any(o.side is Side.SELL for o in decide(obs, config, rng=rng).orders)
        for _ in range(4000)
    )
    assert abs(sells / 4000 - 0.65) < 0.03


def test_momentum_chases_last_return():
    config = ScriptedAgentConfig(kind="Momentum")
    up = decide(make_observation([10, 12]), config)
    down = decide(make_observation([12, 10]), config)
    assert {o.side for o in up.orders} == {Side.BUY}
    assert up.orders[0].price == 13
    assert {o.side for o in down.orders} == {Side.SELL}
    assert down.orders[0].price == 9


def test_noise_agent_deterministic_for_fixed_seed():
    config = ScriptedAgentConfig(kind="Noise", noise_scale=3.0, rng_seed=9)
    obs = make_observation([14, 15])
    first = decide(obs, config, rng=np.random.default_rng(5))
    second = decide(obs, config, rng=np.random.default_rng(5))
    assert first.forecasts == second.forecasts
    assert first.orders == second.orders


def test_reasoning_templates_carry_directional_keywords():
    config = ScriptedAgentConfig(kind="Momentum")
    up = decide(make_observation([10, 12]), config)
    down = decide(make_observation([12, 10]), config)
    assert "buy" in up.memory_plans.lower()
    assert "sell" in down.memory_plans.lower()


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        ScriptedAgentConfig(kind="Oracle")


def test_invalid_probability_rejected():
    with pytest.raises(ConfigError):
        ScriptedAgentConfig(kind="Disposition", disposition_sell_boost=1.5)
