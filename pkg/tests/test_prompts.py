"""Prompt assembly: byte stability, required content, shock and reflection placement."""

from bubblelab import MarketParams, Portfolio
from bubblelab.agents import AgentObservation, PriceObservation
from bubblelab.audit import make_shock
from bubblelab.prompts import (
    FORFEIT_MESSAGE,
    REFLECTION_PROMPT,
    build_prompts,
    schema_prompt,
    state_prompt,
    system_prompt,
)

PARAMS = MarketParams()


def observation(period=1, reflection=False, forfeit=None, history=()):
    return AgentObservation(
        period=period,
        portfolio=Portfolio(cash=100, shares=4, wapp=14),
        price_history=[
            PriceObservation(period=i + 1, price=p, volume=v, dividend=d)
            for i, (p, v, d) in enumerate(history)
        ],
        own_trades=[],
        memory_plans="",
        memory_insights="",
        current_price=14,
        params=PARAMS,
        forfeit_notice=forfeit,
        reflection_requested=reflection,
    )


def test_prompts_are_byte_stable():
    first = build_prompts(observation(), PARAMS)
    second = build_prompts(observation(), PARAMS)
    assert first == second


def test_state_prompt_core_fields():
    text = state_prompt(observation(), PARAMS)
    assert "--- CURRENT PERIOD: 1 of 20 ---" in text
    assert "Cash Balance: 100 units" in text
    assert "Stock Holdings: 4 shares" in text
    assert "Current Reported Price: 14" in text


def test_system_prompt_states_fundamental_value():
    text = system_prompt(PARAMS)
    assert "0.7/0.05 = 14.0" in text
    assert "exactly" in text
    assert "14.0 units per share" in text  # terminal buyout
    assert "Margin purchasing and short selling are strictly prohibited" in text


def test_shock_clause_appended_to_system_prompt():
    shock = make_shock("momentum_vs_newswatcher", "suppress")
    text = system_prompt(PARAMS, shock)
    assert text.endswith(shock.clause)
    assert shock.clause not in system_prompt(PARAMS)


def test_reflection_included_exactly_when_requested():
    with_reflection = build_prompts(observation(reflection=True), PARAMS)
    without = build_prompts(observation(reflection=False), PARAMS)
    assert with_reflection.reflection_prompt == REFLECTION_PROMPT
    assert without.reflection_prompt is None
    user_message = with_reflection.messages()[1]["content"]
    assert user_message.count(REFLECTION_PROMPT) == 1
    assert user_message.startswith(REFLECTION_PROMPT)


def test_history_shows_last_three_periods():
    history = [(14, 0, "0.4"), (15, 2, "1.0"), (16, 1, "0.4"), (17, 3, "1.0")]
    text = state_prompt(observation(period=5, history=history), PARAMS)
    assert "Period 1" not in text
    for period in (2, 3, 4):
        assert f"Period {period}" in text


def test_forfeit_notice_relayed():
    text = state_prompt(observation(forfeit=FORFEIT_MESSAGE), PARAMS)
    assert f"Notice from last period: {FORFEIT_MESSAGE}" in text
    assert "Notice from last period" not in state_prompt(observation(), PARAMS)


def test_schema_prompt_lists_reply_fields():
    text = schema_prompt()
    for field in ("cognitive_process", "price_forecasts", "period_t_plus_10",
                  "orders", "memory_update", "update_insights_txt"):
        assert field in text


def test_messages_layout():
    bundle = build_prompts(observation(), PARAMS)
    messages = bundle.messages()
    assert [m["role"] for m in messages] == ["system", "user"]
    assert bundle.state_prompt in messages[1]["content"]
    assert bundle.schema_prompt in messages[1]["content"]
