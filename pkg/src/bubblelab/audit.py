"""Reasoning audit: stated-action extraction, 20-mechanism judge, shocks.

The judge pipeline renders a fixed audit prompt over an agent-round's
memory text, sends it to a configured chat model (or the deterministic
mock judge), and strictly parses the scored reply. Shock clauses come
from a reviewed catalog file, one amplify/suppress pair per mechanism.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

import pandas as pd

import tomli

from .econometrics import group_mean_difference
from .errors import AuditParseError, ConfigError
from .prompts import PromptBundle, ShockSpec


@dataclass(frozen=True)
class MechanismSpec:
    mechanism_id: str
    category: str
    labels: tuple
    score_rubric: str
    definition: str


TAXONOMY: tuple = (
    MechanismSpec(
        "rational_speculative_bubble", "rational_bubble_theories",
        ("aware_of_resale_logic", "ignores_resale_logic", "unclear"),
        "1.0=explicit resale expectations, 0.5=hinted, 0=none",
        "Agent expects to resell asset at higher price to future buyers (greater fool theory).",
    ),
    MechanismSpec(
        "synchronization_risk", "rational_bubble_theories",
        ("synchronization_risk_acknowledged", "rides_bubble", "no_coordination_reference"),
        "1.0=explicit timing concerns, 0.5=implied, 0=none",
        "Agent delays action due to coordination problem—uncertain when others will exit.",
    ),
    MechanismSpec(
        "asymmetric_information", "rational_bubble_theories",
        ("claims_private_info", "acknowledges_info_disadvantage", "no_info_asymmetry_mention"),
        "1.0=claims advantage, 0.5=acknowledges disadvantage, 0=none",
        "Agent believes they possess superior information relative to other market participants.",
    ),
    MechanismSpec(
        "extrapolation_vs_anchor", "extrapolation_expectations",
        ("pure_extrapolation", "recognizes_overvaluation", "fundamental_anchor", "unobserved"),
        "1.0=fundamental anchor, 0.5=recognizes overvaluation, 0=pure extrapolation",
        "Agent forecasts by extrapolating past trends vs. anchoring to fundamental value.",
    ),
    MechanismSpec(
        "diagnostic_expectations", "extrapolation_expectations",
        ("overweights_recent_signals", "balanced_weighting", "underweights_recent", "unobserved"),
        "1.0=heavy overweighting, 0.5=moderate, 0=balanced",
        "Agent overweights recent salient signals, exhibiting overreaction.",
    ),
    MechanismSpec(
        "wavering_behavior", "extrapolation_expectations",
        ("flip_flopping", "consistent_bullish", "consistent_bearish", "value_focused", "unobserved"),
        "1.0=switches between growth/value, 0.5=shows tension, 0=consistent",
        "Agent alternates between growth/momentum signals (greed) and value signals (fear).",
    ),
    MechanismSpec(
        "disposition_effect", "trading_biases",
        ("holds_losers_sells_winners", "profit_locking_tendency", "loss_averse_holding",
         "rational_profit_taking", "no_evidence"),
        "1.0=clear disposition pattern, 0.5=profit-locking, 0=rational",
        "Tendency to sell winners too early and hold losers too long.",
    ),
    MechanismSpec(
        "momentum_vs_newswatcher", "trading_biases",
        ("momentum", "newswatcher", "hybrid", "unobserved"),
        "1.0=momentum, 0.5=hybrid, 0=newswatcher",
        "Agent follows price trends (momentum) vs. monitors fundamental news (newswatcher).",
    ),
    MechanismSpec(
        "feedback_trading", "trading_biases",
        ("pure_trend_following", "contrarian", "fundamental_based", "unobserved"),
        "1.0=pure trend without fundamentals, 0.5=partial, 0=fundamental-based",
        "Trading based purely on past price changes without fundamental justification.",
    ),
    MechanismSpec(
        "overconfidence", "confidence_attribution",
        ("overconfident", "well_calibrated", "underconfident", "unobserved"),
        "1.0=excessive certainty, 0.5=moderate, 0=well-calibrated",
        "Excessive certainty about one's own judgments, predictions, or trading abilities.",
    ),
    MechanismSpec(
        "self_attribution_bias", "confidence_attribution",
        ("attributes_wins_to_skill", "balanced_attribution", "attributes_losses_externally",
         "unobserved"),
        "1.0=asymmetric attribution, 0.5=partial, 0=balanced",
        "Agent attributes successes to own skill but blames failures on external factors.",
    ),
    MechanismSpec(
        "herding_contagion", "social_herding",
        ("explicit_herding", "fear_missing_out", "contrarian", "independent", "unobserved"),
        "1.0=explicit herding or FOMO, 0.5=implicit, 0=independent",
        "Agent follows crowd behavior or exhibits fear of missing out (FOMO).",
    ),
    MechanismSpec(
        "disagreement_heterogeneous_beliefs", "social_herding",
        ("acknowledges_disagreement", "assumes_consensus", "unobserved"),
        "1.0=recognizes disagreement, 0.5=implicit, 0=assumes consensus",
        "Agent recognizes that market participants hold different views about fundamental value.",
    ),
    MechanismSpec(
        "representativeness_heuristic", "heuristics",
        ("pattern_matching_past_bubbles", "historical_analogy", "no_historical_reference",
         "unobserved"),
        "1.0=explicit past bubble match, 0.5=general analogy, 0=none",
        "Agent matches current situation to past patterns or bubbles.",
    ),
    MechanismSpec(
        "new_era_thinking", "heuristics",
        ("this_time_different", "paradigm_shift_claim", "acknowledges_similarity", "unobserved"),
        "1.0=claims new paradigm, 0.5=hints uniqueness, 0=acknowledges patterns",
        "Agent believes \"this time is different\"—current situation is structurally unique.",
    ),
    MechanismSpec(
        "availability_bias", "heuristics",
        ("overweights_salient_events", "balanced_memory", "unobserved"),
        "1.0=focuses on salient events, 0.5=partial, 0=balanced",
        "Agent overweights easily recalled vivid events while ignoring base rates.",
    ),
    MechanismSpec(
        "limited_arbitrage_awareness", "risk_perception",
        ("acknowledges_arbitrage_limits", "assumes_unlimited_arbitrage", "unobserved"),
        "1.0=explicit limits mention, 0.5=implicit, 0=assumes no limits",
        "Agent recognizes that arbitrage has limits (fundamental risk, capital constraints).",
    ),
    MechanismSpec(
        "loss_aversion", "risk_perception",
        ("loss_averse", "risk_neutral", "risk_seeking", "unobserved"),
        "1.0=clear asymmetric sensitivity, 0.5=moderate, 0=symmetric",
        "Agent shows asymmetric sensitivity to losses vs gains (losses loom larger).",
    ),
    MechanismSpec(
        "narrative_tone", "narrative_sentiment",
        ("amplifying", "cautionary", "neutral"),
        "0-1 scaled by emotive language intensity",
        "Agent interprets and propagates narrative tone—amplifying (exuberant) vs cautionary "
        "(fearful) vs neutral.",
    ),
    MechanismSpec(
        "statistical_testing", "narrative_sentiment",
        ("formal_test", "heuristic_threshold", "no_test"),
        "1.0=formal test, 0.5=heuristic, 0=none",
        "Agent references formal tests or heuristic thresholds for bubble detection.",
    ),
)

MECHANISM_IDS = tuple(m.mechanism_id for m in TAXONOMY)
_BY_ID = {m.mechanism_id: m for m in TAXONOMY}
CATEGORIES = (
    "rational_bubble_theories", "extrapolation_expectations", "trading_biases",
    "confidence_attribution", "social_herding", "heuristics",
    "risk_perception", "narrative_sentiment",
)


@dataclass
class MechanismAssessment:
    mechanism_id: str
    mechanism_category: str
    label: str
    confidence: float
    numeric_score: float
    evidence_sentences: list
    notes: str = ""


@dataclass
class AuditReport:
    assessments: list  # exactly one MechanismAssessment per taxonomy id, in order
    behavioral_bias_summary: dict
    summary: str
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class StatedAction:
    source: str  # "Plans" | "Insights"
    value: int  # -1, 0, +1


# --- stated-action extraction ------------------------------------------------

@dataclass(frozen=True)
class Lexicon:
    buy: frozenset
    sell: frozenset


DEFAULT_LEXICON = Lexicon(
    buy=frozenset({"buy", "bid", "accumulate", "acquire", "long", "purchase"}),
    sell=frozenset({"sell", "offload", "liquidate", "short", "ask", "exit"}),
)

_SUFFIXES = ("", "s", "es", "ed", "ing")


def _stem_variants(stem: str) -> set:
    variants = {stem + suffix for suffix in _SUFFIXES}
    if stem.endswith("e"):  # accumulate -> accumulating
        variants.update(stem[:-1] + suffix for suffix in ("ing", "ed"))
    variants.add(stem + stem[-1] + "ing")  # bid -> bidding
    variants.add(stem + stem[-1] + "ed")
    return variants


def load_lexicon(path=None) -> Lexicon:
    if path is None:
        text = resources.files("bubblelab.data").joinpath("lexicon.toml").read_text()
    else:
        text = open(path, encoding="utf-8").read()
    raw = tomli.loads(text)
    buy = frozenset(raw.get("buy", []))
    sell = frozenset(raw.get("sell", []))
    if not buy or not sell:
        raise ConfigError("lexicon needs nonempty buy and sell lists")
    return Lexicon(buy=buy, sell=sell)


def extract_stated_action(
    text: str,
    lexicon: Lexicon = DEFAULT_LEXICON,
    source: str = "Plans",
) -> StatedAction:
    """Net keyword count with word-boundary tokenization and suffix stemming."""
    tokens = re.findall(r"[a-z]+", (text or "").lower())
    buy_forms = set().union(*(_stem_variants(s) for s in lexicon.buy))
    sell_forms = set().union(*(_stem_variants(s) for s in lexicon.sell))
    net = sum(t in buy_forms for t in tokens) - sum(t in sell_forms for t in tokens)
    return StatedAction(source=source, value=(net > 0) - (net < 0))


# --- audit prompt -------------------------------------------------------------

@dataclass(frozen=True)
class AuditContext:
    agent_id: str
    round: int
    market_type: str
    price: int
    fundamental_value: int
    recent_returns: tuple  # most recent last
    plan_text: str
    insights_text: str
    sim: object = 0  # simulation key, opaque


_PROMPT_HEADER = """You are auditing LLM trading agents for behavioral biases.

Context:
- Agent: {agent} | Round: {round} | Market: {market_type}
- Price/Fundamental: {price_info} | Returns: {recent_returns}
- Plan: "{plan_text}"
- Insights: "{insights_text}"

Task: Evaluate 20 behavioral mechanisms. For each:
1. Select best-fitting label
2. Cite exact evidence (use [] if none)
3. Provide confidence (0-1) and numeric_score
4. Add brief notes (<=25 words) only if needed

=== MECHANISMS ===
"""

_PROMPT_FOOTER = """
=== OUTPUT FORMAT ===

Return valid JSON:
{
  "mechanism_assessments": [
    {
      "mechanism_id": "disposition_effect",
      "mechanism_category": "trading_biases",
      "label": "profit_locking_tendency",
      "confidence": 0.8,
      "numeric_score": 0.5,
      "evidence_sentences": ["I will lock in my profits now."],
      "notes": "Shows profit-taking without clear loss-holding pattern"
    }
    // ... 19 more mechanisms
  ],
  "behavioral_bias_summary": {
    "primary_biases_detected": ["disposition_effect", "overconfidence", "herding_contagion"],
    "bubble_awareness": "yes",
    "strategy_when_aware": "exploit"
  },
  "summary": "Agent exhibits disposition effect and overconfidence while attempting to exploit bubble."
}

Categories: rational_bubble_theories | extrapolation_expectations | trading_biases | confidence_attribution | social_herding | heuristics | risk_perception | narrative_sentiment
"""


def build_audit_prompt(context: AuditContext) -> str:
    """Render the audit prompt. Price info renders as "P=<p> vs FV=<fv>";
    recent returns render as a bracketed list of 4-decimal floats, oldest first.
    """
    returns = "[" + ", ".join(f"{r:.4f}" for r in context.recent_returns) + "]"
    header = _PROMPT_HEADER.format(
        agent=context.agent_id, round=context.round, market_type=context.market_type,
        price_info=f"P={context.price} vs FV={context.fundamental_value}",
        recent_returns=returns,
        plan_text=context.plan_text, insights_text=context.insights_text,
    )
    sections = []
    for i, m in enumerate(TAXONOMY, start=1):
        sections.append(
            f"\n{i}. {m.mechanism_id}\n"
            f"Labels: {' | '.join(m.labels)}\n"
            f"Score: {m.score_rubric}\n"
            f"Definition: {m.definition}\n"
        )
    return header + "".join(sections) + _PROMPT_FOOTER


# --- response parsing ---------------------------------------------------------

def _in_unit_interval(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and 0 <= value <= 1


def parse_audit_response(
    raw_text: str,
    audited_text: Optional[str] = None,
    verify_evidence: bool = True,
) -> AuditReport:
    """Strict parse of a judge reply; collects every violation before raising."""
    violations = []
    try:
        payload = json.loads(raw_text)
    except json.JSONDecodeError as exc:
        raise AuditParseError([f"invalid JSON: {exc}"])
    if not isinstance(payload, dict):
        raise AuditParseError(["reply is not a JSON object"])

    entries = payload.get("mechanism_assessments")
    if not isinstance(entries, list):
        raise AuditParseError(["missing mechanism_assessments list"])

    warnings = []
    seen: dict[str, MechanismAssessment] = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            violations.append(f"assessment {i} is not an object")
            continue
        mid = entry.get("mechanism_id")
        spec = _BY_ID.get(mid)
        if spec is None:
            violations.append(f"unknown mechanism_id: {mid!r}")
            continue
        if mid in seen:
            violations.append(f"duplicate mechanism: {mid}")
            continue
        label = entry.get("label")
        if label not in spec.labels:
            violations.append(f"{mid}: unknown label {label!r}")
        confidence = entry.get("confidence")
        if not _in_unit_interval(confidence):
            violations.append(f"{mid}: confidence {confidence!r} outside [0, 1]")
        score = entry.get("numeric_score")
        if not _in_unit_interval(score):
            violations.append(f"{mid}: numeric_score {score!r} outside [0, 1]")
        evidence = entry.get("evidence_sentences", [])
        if not isinstance(evidence, list) or not all(isinstance(e, str) for e in evidence):
            violations.append(f"{mid}: evidence_sentences must be a list of strings")
            evidence = []
        elif verify_evidence and audited_text is not None:
            for sentence in evidence:
                if sentence and sentence not in audited_text:
                    warnings.append(f"{mid}: evidence not found verbatim: {sentence!r}")
        seen[mid] = MechanismAssessment(
            mechanism_id=mid,
            mechanism_category=entry.get("mechanism_category", spec.category),
            label=label if label in spec.labels else "",
            confidence=float(confidence) if _in_unit_interval(confidence) else 0.0,
            numeric_score=float(score) if _in_unit_interval(score) else 0.0,
            evidence_sentences=list(evidence),
            notes=str(entry.get("notes", "")),
        )

    missing = [mid for mid in MECHANISM_IDS if mid not in seen]
    for mid in missing:
        violations.append(f"missing mechanism: {mid}")
    if violations:
        raise AuditParseError(violations)

    bias_summary = payload.get("behavioral_bias_summary")
    if not isinstance(bias_summary, dict):
        raise AuditParseError(["missing behavioral_bias_summary object"])

    return AuditReport(
        assessments=[seen[mid] for mid in MECHANISM_IDS],
        behavioral_bias_summary=bias_summary,
        summary=str(payload.get("summary", "")),
        warnings=warnings,
    )


# --- mock judge ---------------------------------------------------------------

def _stable_unit(key: str) -> float:
    digest = hashlib.md5(key.encode("utf-8")).hexdigest()
    return int(digest[:8], 16) / 0xFFFFFFFF


class MockJudge:
    """Deterministic offline judge.

    Scores derive from a stable hash of (mechanism, audited text), plus an
    optional planted shift, so experiments on the judge pipeline have a
    known ground truth.
    """

    def __init__(self, score_shift: float = 0.0):
        self.score_shift = score_shift

    def __call__(self, prompt: str, context: AuditContext) -> str:
        text = context.plan_text + "\n" + context.insights_text
        cell = f"{context.agent_id}|{context.round}|{context.sim}"
        entries = []
        for m in TAXONOMY:
            base = 0.5 * _stable_unit(f"{m.mechanism_id}|{cell}|{text}")
            score = min(1.0, max(0.0, base + self.score_shift))
            entries.append({
                "mechanism_id": m.mechanism_id,
                "mechanism_category": m.category,
                "label": m.labels[-1],
                "confidence": round(0.5 + 0.5 * _stable_unit(f"c|{m.mechanism_id}|{cell}"), 4),
                "numeric_score": round(score, 4),
                "evidence_sentences": [],
                "notes": "",
            })
        return json.dumps({
            "mechanism_assessments": entries,
            "behavioral_bias_summary": {
                "primary_biases_detected": [],
                "bubble_awareness": "yes" if context.price > context.fundamental_value else "no",
                "strategy_when_aware": "none",
            },
            "summary": "Deterministic mock assessment.",
        })


def endpoint_judge(model_config) -> Callable[[str, AuditContext], str]:
    """Judge backed by a chat endpoint configured like any agent model."""
    from .gateway import transport

    def judge(prompt: str, context: AuditContext) -> str:
        bundle = PromptBundle(
            system_prompt="You are a strict JSON-only auditor.",
            state_prompt=prompt, schema_prompt="",
        )
        return transport(bundle, model_config).text

    return judge


def audit_reasoning(
    reasoning_rows: pd.DataFrame,
    rounds: pd.DataFrame,
    market_type: str,
    fundamental_value: int,
    judge: Callable[[str, AuditContext], str],
    sources: tuple = ("plans", "insights"),
) -> pd.DataFrame:
    """Score every (sim, agent, period, source) cell; returns a long table."""
    price_by = {(r.sim, r.period): r.price for r in rounds.itertuples()}
    rows = []
    for rec in reasoning_rows.itertuples():
        prices = [price_by[(rec.sim, p)] for p in range(1, rec.period + 1)
                  if (rec.sim, p) in price_by]
        returns = tuple(
            (b - a) / a for a, b in zip(prices[-5:-1], prices[-4:])
        )
        price = price_by.get((rec.sim, rec.period), fundamental_value)
        for source in sources:
            text = rec.plans if source == "plans" else rec.insights
            context = AuditContext(
                agent_id=rec.agent, round=rec.period, market_type=market_type,
                price=price, fundamental_value=fundamental_value,
                recent_returns=returns,
                plan_text=rec.plans, insights_text=rec.insights,
                sim=rec.sim,
            )
            report = parse_audit_response(
                judge(build_audit_prompt(context), context), audited_text=text,
            )
            for a in report.assessments:
                rows.append({
                    "sim": rec.sim, "agent": rec.agent, "period": rec.period,
                    "source": source, "mechanism_id": a.mechanism_id,
                    "category": a.mechanism_category, "label": a.label,
                    "confidence": a.confidence, "score": a.numeric_score,
                })
    return pd.DataFrame(rows)


# --- shocks -------------------------------------------------------------------

def _load_clauses() -> dict:
    text = resources.files("bubblelab.data").joinpath("shock_clauses.toml").read_text()
    return tomli.loads(text)


def make_shock(mechanism_id: str, direction: str) -> ShockSpec:
    direction = direction.capitalize()
    if direction not in ("Amplify", "Suppress"):
        raise ConfigError(f"shock direction must be amplify or suppress, got {direction!r}")
    catalog = _load_clauses()
    if mechanism_id not in catalog:
        raise ConfigError(f"unknown mechanism id: {mechanism_id!r}")
    clause = catalog[mechanism_id][direction.lower()]
    return ShockSpec(mechanism_id=mechanism_id, direction=direction, clause=clause)


def shock_comparison(
    amplify: pd.DataFrame,
    suppress: pd.DataFrame,
    benchmark: pd.DataFrame,
    fixed_effects: tuple = ("agent", "period", "sim"),
    cluster: Optional[str] = "agent",
) -> pd.DataFrame:
    """Per-mechanism mean scores and FE-controlled pairwise arm differences."""
    def reindex(frame):
        # Arms come from separate artifact directories, so their sim keys
        # differ; renumber within arm so the sim FE does not absorb the arm.
        frame = frame.copy()
        frame["sim"] = pd.factorize(frame["sim"])[0]
        return frame

    amplify, suppress, benchmark = reindex(amplify), reindex(suppress), reindex(benchmark)
    pairs = [
        ("amp_vs_bench", amplify, benchmark),
        ("sup_vs_bench", suppress, benchmark),
        ("amp_vs_sup", amplify, suppress),
    ]
    rows = []
    for mid in MECHANISM_IDS:
        row = {"mechanism_id": mid}
        for name, frame in (("amplify", amplify), ("suppress", suppress),
                            ("benchmark", benchmark)):
            sub = frame[frame.mechanism_id == mid]
            row[f"mean_{name}"] = float(sub.score.mean()) if len(sub) else float("nan")
        for name, treated, control in pairs:
            t_rows = treated[treated.mechanism_id == mid].assign(arm_flag=1)
            c_rows = control[control.mechanism_id == mid].assign(arm_flag=0)
            stacked = pd.concat([t_rows, c_rows], ignore_index=True)
            diff = group_mean_difference(
                stacked, "score", "arm_flag",
                fixed_effects=[c for c in fixed_effects if c in stacked.columns],
                cluster=cluster if cluster in stacked.columns else None,
            )
            row[f"{name}_diff"] = diff.difference
            row[f"{name}_t"] = diff.t_stat
        rows.append(row)
    return pd.DataFrame(rows)
