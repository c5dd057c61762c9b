"""Named empirical analyses over persisted session panels.

Every analysis is a pure function of the loaded panel frames, so
re-running on the same artifact directories reproduces identical tables.
Practice periods (period <= 0) are excluded from all regressions.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .econometrics import Design, FitResult, fit, group_mean_difference
from .errors import ConfigError
from .panel import (
    AgentRoundRecord,
    ForecastRecord,
    ReasoningRecord,
    RoundRecord,
    read_jsonl,
)

ANALYSIS_IDS = (
    "disposition", "expectation_formation", "expectation_trading",
    "bid_offer", "disagreement_volume", "bubble_metrics", "bubble_episode_diffs",
)

FUNDAMENTAL_VALUE = 14
HORIZONS = (0, 2, 5, 10)
N_RETURN_LAGS = 4


@dataclass(frozen=True)
class AnalysisSpec:
    analysis: str
    horizons: tuple = HORIZONS
    bid_offer_unit: str = "shares"  # "shares" | "orders"
    avg_expectation_form: str = "return"  # "return" | "level"
    return_form: str = "simple"  # "simple" | "log"

    def __post_init__(self):
        if self.analysis not in ANALYSIS_IDS:
            raise ConfigError(f"unknown analysis id: {self.analysis!r}")
        if self.bid_offer_unit not in ("shares", "orders"):
            raise ConfigError("bid_offer_unit must be 'shares' or 'orders'")
        if self.avg_expectation_form not in ("return", "level"):
            raise ConfigError("avg_expectation_form must be 'return' or 'level'")
        if self.return_form not in ("simple", "log"):
            raise ConfigError("return_form must be 'simple' or 'log'")


@dataclass
class Panel:
    rounds: pd.DataFrame
    agent_rounds: pd.DataFrame
    forecasts: pd.DataFrame
    reasoning: pd.DataFrame
    fundamental_value: int = FUNDAMENTAL_VALUE


def load_panel(session_dirs: list, fundamental_value: int = FUNDAMENTAL_VALUE) -> Panel:
    """Load one or more artifact directories into stacked frames.

    Simulation keys are namespaced by directory so sims never collide, and
    market_type from each session.meta is attached to every row.
    """
    frames = {"rounds": [], "agent_rounds": [], "forecasts": [], "reasoning": []}
    types = {"rounds": RoundRecord, "agent_rounds": AgentRoundRecord,
             "forecasts": ForecastRecord, "reasoning": ReasoningRecord}
    for i, directory in enumerate(session_dirs):
        directory = Path(directory)
        meta = json.loads((directory / "session.meta").read_text())
        market_type = meta.get("market_type", "unknown")
        label = f"{i}_{directory.name}"
        for name, record_type in types.items():
            records = read_jsonl(directory / f"{name}.jsonl", record_type)
            frame = pd.DataFrame([vars(r) for r in records])
            if frame.empty:
                continue
            frame["sim"] = label + ":" + frame["sim"].astype(str)
            frame["market_type"] = market_type
            frames[name].append(frame)
    if not frames["rounds"]:
        raise ConfigError("no session data found in the given directories")
    stacked = {k: pd.concat(v, ignore_index=True) if v else pd.DataFrame()
               for k, v in frames.items()}
    return Panel(rounds=stacked["rounds"], agent_rounds=stacked["agent_rounds"],
                 forecasts=stacked["forecasts"], reasoning=stacked["reasoning"],
                 fundamental_value=fundamental_value)


def _main_rounds(panel: Panel) -> pd.DataFrame:
    return panel.rounds[panel.rounds.period >= 1].copy()


def market_round_aggregates(panel: Panel) -> pd.DataFrame:
    """Per (sim, period) aggregates: price change, bid-offer gaps in both
    units, dollar volume, forecast disagreement, bubble flag."""
    rounds = _main_rounds(panel).sort_values(["sim", "period"]).reset_index(drop=True)
    rounds["dollar_volume"] = rounds.volume * rounds.price
    rounds["gap_shares"] = rounds.bid_shares - rounds.ask_shares
    rounds["gap_orders"] = rounds.bid_orders - rounds.ask_orders
    rounds["bubble"] = (rounds.price > panel.fundamental_value).astype(int)
    grouped = rounds.groupby("sim", sort=False)
    rounds["dprice"] = grouped.price.diff()
    rounds["gap_shares_lag"] = grouped.gap_shares.shift(1)
    rounds["gap_orders_lag"] = grouped.gap_orders.shift(1)

    fc = panel.forecasts
    if len(fc):
        fc = fc[fc.period >= 1]
    if len(fc):
        per_agent = fc.groupby(["sim", "period", "agent"]).forecast.mean().reset_index()
        disagreement = (
            per_agent.groupby(["sim", "period"]).forecast.std(ddof=0)
            .rename("disagreement").reset_index()
        )
        rounds = rounds.merge(disagreement, on=["sim", "period"], how="left")
    else:
        rounds["disagreement"] = np.nan
    return rounds


def _returns_by_lag(panel: Panel) -> pd.DataFrame:
    """lag_k at period t is the simple return from P_{t-k-1} to P_{t-k},
    i.e. the k-th most recent return already realized when period t opens."""
    rounds = _main_rounds(panel).sort_values(["sim", "period"])
    rounds["ret"] = rounds.groupby("sim", sort=False).price.pct_change()
    out = rounds[["sim", "period"]].copy()
    for k in range(1, N_RETURN_LAGS + 1):
        out[f"lag{k}"] = rounds.groupby("sim", sort=False).ret.shift(k).values
    return out


def _avg_expectation(panel: Panel, form: str) -> pd.DataFrame:
    fc = panel.forecasts[panel.forecasts.period >= 1]
    key = ["sim", "agent", "period"]
    if form == "level":
        avg = fc.groupby(key).forecast.mean()
    else:
        avg = fc.groupby(key).implied_return.mean()
    return avg.rename("avg_expectation").reset_index()


_FE_FULL = ["agent", "period", "sim"]


def disposition_analysis(panel: Panel, spec: Optional[AnalysisSpec] = None) -> list[FitResult]:
    """Sell propensity on the paper-gain indicator, with and without the
    average-expectation control, in pooled and full-FE variants."""
    spec = spec or AnalysisSpec("disposition")
    data = panel.agent_rounds[panel.agent_rounds.period >= 1].merge(
        _avg_expectation(panel, spec.avg_expectation_form),
        on=["sim", "agent", "period"], how="left",
    )
    designs = [
        Design("sell_dummy", ["gain_dummy"], [], "agent"),
        Design("sell_dummy", ["gain_dummy"], _FE_FULL, "agent"),
        Design("sell_dummy", ["gain_dummy", "avg_expectation"], [], "agent"),
        Design("sell_dummy", ["gain_dummy", "avg_expectation"], _FE_FULL, "agent"),
    ]
    return [fit(data, d) for d in designs]


def expectation_formation_analysis(panel: Panel, spec=None) -> dict[int, list[FitResult]]:
    """Implied expected returns per horizon on four lagged realized returns."""
    spec = spec or AnalysisSpec("expectation_formation")
    lags = _returns_by_lag(panel)
    fc = panel.forecasts[panel.forecasts.period >= 1].merge(lags, on=["sim", "period"])
    if spec.return_form == "log":
        fc = fc.assign(implied_return=np.log(fc.forecast / fc.price_at_forecast))
    lag_cols = [f"lag{k}" for k in range(1, N_RETURN_LAGS + 1)]
    results = {}
    for horizon in spec.horizons:
        sub = fc[fc.horizon == horizon]
        results[horizon] = [
            fit(sub, Design("implied_return", lag_cols, [], "agent")),
            fit(sub, Design("implied_return", lag_cols, _FE_FULL, "agent")),
        ]
    return results


def expectation_trading_analysis(panel: Panel, spec=None) -> dict[int, list[FitResult]]:
    """Next-period net-buy indicator on the current implied expected return."""
    spec = spec or AnalysisSpec("expectation_trading")
    ar = panel.agent_rounds[panel.agent_rounds.period >= 1][
        ["sim", "agent", "period", "buy_dummy"]
    ].copy()
    ar["period"] = ar.period - 1  # align buy_dummy(t+1) onto the forecast row at t
    ar = ar.rename(columns={"buy_dummy": "buy_next"})
    fc = panel.forecasts[panel.forecasts.period >= 1].merge(
        ar, on=["sim", "agent", "period"], how="inner",
    )
    results = {}
    for horizon in spec.horizons:
        sub = fc[fc.horizon == horizon]
        results[horizon] = [
            fit(sub, Design("buy_next", ["implied_return"], [], "agent")),
            fit(sub, Design("buy_next", ["implied_return"], _FE_FULL, "agent")),
        ]
    return results


def _market_fe(data: pd.DataFrame) -> list[str]:
    fe = ["period", "sim"]
    if data.market_type.nunique() > 1:
        fe.append("market_type")
    return fe


def bid_offer_analysis(panel: Panel, spec=None) -> dict[str, list[FitResult]]:
    """Price change on the lagged bid-offer gap, in both unit conventions."""
    spec = spec or AnalysisSpec("bid_offer")
    data = market_round_aggregates(panel)
    results = {}
    for unit in ("shares", "orders"):
        gap = f"gap_{unit}_lag"
        results[unit] = [
            fit(data, Design("dprice", [gap], [], "sim")),
            fit(data, Design("dprice", [gap], ["period"], "sim")),
            fit(data, Design("dprice", [gap], _market_fe(data), "sim")),
        ]
    return results


def disagreement_volume_analysis(panel: Panel, spec=None) -> list[FitResult]:
    """Dollar volume on cross-agent forecast disagreement, FE ladder."""
    spec = spec or AnalysisSpec("disagreement_volume")
    data = market_round_aggregates(panel)
    ladders = [[], ["period"], ["period", "sim"], _market_fe(data)]
    return [fit(data, Design("dollar_volume", ["disagreement"], fe, "sim"))
            for fe in ladders]


@dataclass
class BubbleMetrics:
    mse_fv: float
    pv_variance: float
    n_rounds: int


def bubble_metrics(panel: Panel) -> dict[str, BubbleMetrics]:
    """MSE of prices around fundamental value and mean within-period
    cross-agent portfolio-value variance, per market type."""
    out = {}
    rounds = _main_rounds(panel)
    ar = panel.agent_rounds[panel.agent_rounds.period >= 1].copy()
    ar["pv"] = ar.portfolio_value.astype(float)
    for market_type, sub in rounds.groupby("market_type"):
        mse = float(((sub.price - panel.fundamental_value) ** 2).mean())
        sub_ar = ar[ar.market_type == market_type]
        pv_var = float(
            sub_ar.groupby(["sim", "period"]).pv.var(ddof=0).mean()
        ) if len(sub_ar) else float("nan")
        out[market_type] = BubbleMetrics(
            mse_fv=mse, pv_variance=pv_var, n_rounds=len(sub),
        )
    return out


def bubble_episode_diffs(
    scores: pd.DataFrame,
    panel: Panel,
    sources: tuple = ("plans", "insights"),
) -> pd.DataFrame:
    """Mechanism-score differences between bubble and non-bubble rounds,
    FE-controlled, one row per (mechanism, text source)."""
    aggregates = market_round_aggregates(panel)[["sim", "period", "bubble"]]
    merged = scores.merge(aggregates, on=["sim", "period"], how="inner")
    rows = []
    for source in sources:
        sub_source = merged[merged.source == source]
        for mid, sub in sub_source.groupby("mechanism_id"):
            diff = group_mean_difference(
                sub, "score", "bubble", fixed_effects=_FE_FULL, cluster="agent",
            )
            rows.append({
                "mechanism_id": mid, "source": source,
                "difference": diff.difference, "t_stat": diff.t_stat,
                "n_obs": diff.n_obs,
            })
    return pd.DataFrame(rows)


def results_to_frame(results) -> pd.DataFrame:
    """Flatten nested FitResult collections into one long CSV-ready table."""
    rows = []

    def add(column_id, result: FitResult):
        for term in result.params:
            rows.append({
                "column": column_id, "term": term,
                "coef": result.params[term], "se": result.std_errors[term],
                "t": result.t_stats[term], "n": result.n_obs,
                "adj_r2": result.adj_r_squared,
            })

    if isinstance(results, list):
        for i, r in enumerate(results, start=1):
            add(str(i), r)
    elif isinstance(results, dict):
        for key, group in results.items():
            for i, r in enumerate(group, start=1):
                add(f"{key}_{i}", r)
    else:
        add("1", results)
    return pd.DataFrame(rows)


def price_path_summary(rounds: pd.DataFrame) -> pd.DataFrame:
    """Cross-simulation mean price with a 95% band, plus mean volume."""
    main = rounds[rounds.period >= 1]
    grouped = main.groupby("period")
    n = grouped.price.count()
    mean = grouped.price.mean()
    se = grouped.price.std(ddof=1).fillna(0.0) / np.sqrt(n)
    return pd.DataFrame({
        "round": mean.index,
        "mean_price": mean.values,
        "ci_lo": (mean - 1.96 * se).values,
        "ci_hi": (mean + 1.96 * se).values,
        "mean_volume": grouped.volume.mean().values,
    })


def plot_price_paths(rounds: pd.DataFrame, svg_path, csv_path=None,
                     fundamental_value: int = FUNDAMENTAL_VALUE) -> pd.DataFrame:
    """Render mean price with confidence band and volume bars to SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = price_path_summary(rounds)
    fig, (ax_price, ax_volume) = plt.subplots(
        2, 1, figsize=(8, 6), sharex=True, height_ratios=[3, 1],
    )
    ax_price.fill_between(summary["round"], summary.ci_lo, summary.ci_hi,
                          alpha=0.25, label="95% band")
    ax_price.plot(summary["round"], summary.mean_price, marker="o", label="mean price")
    ax_price.axhline(fundamental_value, linestyle="--", color="black",
                     label=f"fundamental value = {fundamental_value}")
    ax_price.set_ylabel("price")
    ax_price.legend()
    ax_volume.bar(summary["round"], summary.mean_volume)
    ax_volume.set_ylabel("volume")
    ax_volume.set_xlabel("round")
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    if csv_path is not None:
        summary.to_csv(csv_path, index=False)
    return summary
