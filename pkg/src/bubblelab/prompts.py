"""Prompt assembly for LLM-backed agents.

All text renders deterministically from (params, observation, shock), so a
prompt bundle for fixed inputs is byte-stable across runs.
"""

from dataclasses import dataclass
from typing import Optional

from .agents import AgentObservation
from .params import MarketParams

REPLY_SCHEMA = """{
  "cognitive_process": {
    "market_analysis": "<string: Analyze recent price trends relative to the fundamental value of 14.0>",
    "strategy_formulation": "<string: Detail your planned orders and justify the prices based on your budget>"
  },
  "price_forecasts": {
    "period_t": <integer: expected clearing price for the current period>,
    "period_t_plus_2": <integer: expected clearing price 2 periods from now>,
    "period_t_plus_5": <integer: expected clearing price 5 periods from now>,
    "period_t_plus_10": <integer: expected clearing price 10 periods from now>
  },
  "orders": [
    {
      "type": "<string: strictly 'BUY' or 'SELL'>",
      "price": <integer: limit price, must be > 0>,
      "quantity": <integer: number of shares, must be > 0>
    }
  ],
  "memory_update": {
    "update_plans_txt": "<string: Forward-looking strategies to save for next round>",
    "update_insights_txt": "<string: Lessons learned or mistakes to avoid>"
  }
}"""

REFLECTION_PROMPT = (
    "You have completed 3 practice rounds. Review your trading performance. "
    "Did you buy above the fundamental value? Did you sell below it? Write a "
    "comprehensive set of rules for yourself in your INSIGHTS.txt file to "
    "guide your behavior in the real market."
)

FORFEIT_MESSAGE = (
    "Invalid JSON format. You have lost your turn for this period. "
    "Please output strictly valid JSON."
)


@dataclass(frozen=True)
class ShockSpec:
    mechanism_id: str
    direction: str  # "Amplify" | "Suppress"
    clause: str


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    state_prompt: str
    schema_prompt: str
    reflection_prompt: Optional[str] = None

    def messages(self) -> list[dict]:
        user = self.state_prompt + "\n\n" + self.schema_prompt
        if self.reflection_prompt:
            user = self.reflection_prompt + "\n\n" + user
        return [
            {"role": "system", "content": self.system_prompt},
            {"role": "user", "content": user},
        ]


def _format_cash(value) -> str:
    text = format(value, "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


def system_prompt(params: MarketParams, shock: Optional[ShockSpec] = None) -> str:
    fv = f"{float(params.fundamental_value()):.1f}"
    rate_pct = _format_cash(params.interest_rate * 100)
    lines = [
        "System Role: You are a rational, profit-maximizing participant in a "
        "simulated financial market. Your sole objective is to maximize your "
        "final wealth (total cash balance) at the end of the experiment.",
        "",
        "Market Environment and Asset Fundamentals:",
        f"- Duration: The market operates for exactly {params.main_periods} trading periods.",
        "- Assets: You can hold Cash and Stock.",
        f"- Risk-Free Rate: Uninvested Cash held at the end of a period earns an "
        f"interest rate of r = {rate_pct}%.",
        f"- Dividends: Each share of Stock pays a stochastic dividend at the end of "
        f"each period. The dividend is drawn from a uniform distribution: "
        f"D in {{{_format_cash(params.dividend_low)}, {_format_cash(params.dividend_high)}}} "
        f"with equal probability. The expected dividend is "
        f"E[D] = {_format_cash(params.expected_dividend())}.",
        f"- Terminal Value: At the end of period {params.main_periods}, the market closes. "
        f"All outstanding shares of Stock are automatically liquidated for Cash at a "
        f"fixed fundamental value of {float(params.buyout_value):.1f} units per share.",
        f"- Note on Valuation: Because the expected dividend is "
        f"{_format_cash(params.expected_dividend())} and the interest rate is {rate_pct}%, "
        f"the fundamental value of the stock is exactly "
        f"{_format_cash(params.expected_dividend())}/{_format_cash(params.interest_rate)} = {fv} "
        f"at all times.",
        "",
        "Rules: Margin purchasing and short selling are strictly prohibited. If your "
        "SELL quantities exceed your shares, the excess sell orders are cancelled, "
        "keeping the highest ask prices. If your total BUY outlay exceeds your cash, "
        "the lowest-priced bids are cancelled until it fits.",
        f"Forecast rewards: for every price forecast falling within plus or minus "
        f"{_format_cash(params.forecast_tolerance)} units of the realized market-clearing "
        f"price, a bonus of {_format_cash(params.forecast_reward)} Cash units will be added "
        f"to your final wealth.",
    ]
    text = "\n".join(lines)
    if shock is not None:
        text = text + "\n\n" + shock.clause
    return text


def state_prompt(observation: AgentObservation, params: MarketParams) -> str:
    pf = observation.portfolio
    lines = [
        f"--- CURRENT PERIOD: {observation.period} of {params.main_periods} ---",
        "Your Current Portfolio:",
        f"- Cash Balance: {_format_cash(pf.cash)} units",
        f"- Stock Holdings: {pf.shares} shares",
        "",
        "Market History (Last 3 Periods):",
    ]
    recent = observation.price_history[-3:]
    if recent:
        for h in reversed(recent):
            lines.append(
                f"- Period {h.period}: Clearing Price = {h.price}, "
                f"Volume = {h.volume}, Dividend Paid = {h.dividend}"
            )
    else:
        lines.append("- No completed periods yet.")
    lines.append("")
    lines.append("Your Recent Trades:")
    if observation.own_trades:
        for trade in observation.own_trades[-3:]:
            lines.append(
                f"- Period {trade['period']}: Bought {trade['bought']} shares; "
                f"Sold {trade['sold']} shares"
            )
    else:
        lines.append("- None yet.")
    lines.append("")
    lines.append(f"Current Reported Price: {observation.current_price}")
    lines.append("")
    lines.append("Your PLANS.txt:")
    lines.append(observation.memory_plans or "(empty)")
    lines.append("Your INSIGHTS.txt:")
    lines.append(observation.memory_insights or "(empty)")
    if observation.forfeit_notice:
        lines.append("")
        lines.append(f"Notice from last period: {observation.forfeit_notice}")
    return "\n".join(lines)


def schema_prompt() -> str:
    return (
        "Respond with strictly valid JSON matching this schema exactly "
        "(field names as printed):\n" + REPLY_SCHEMA
    )


def build_prompts(
    observation: AgentObservation,
    params: MarketParams,
    shock: Optional[ShockSpec] = None,
) -> PromptBundle:
    """Assemble the full prompt bundle for one agent-round."""
    return PromptBundle(
        system_prompt=system_prompt(params, shock),
        state_prompt=state_prompt(observation, params),
        schema_prompt=schema_prompt(),
        reflection_prompt=REFLECTION_PROMPT if observation.reflection_requested else None,
    )
