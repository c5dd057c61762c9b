"""Reasoning audit: prompt rendering, strict parsing, stated actions, shocks."""

import json

import pytest

from bubblelab.audit import (
    CATEGORIES,
    MECHANISM_IDS,
    TAXONOMY,
    AuditContext,
    Lexicon,
    MockJudge,
    build_audit_prompt,
    extract_stated_action,
    load_lexicon,
    make_shock,
    parse_audit_response,
)
from bubblelab.errors import AuditParseError, ConfigError


def context(**overrides):
    base = dict(
        agent_id="a007", round=9, market_type="scripted", price=16,
        fundamental_value=14, recent_returns=(0.01, -0.02, 0.0, 0.0512),
        plan_text="Plan to buy around 16.", insights_text="Buying has been working.",
    )
    base.update(overrides)
    return AuditContext(**base)


def mock_reply(ctx=None):
    return MockJudge()(build_audit_prompt(ctx or context()), ctx or context())


def test_taxonomy_has_20_mechanisms_across_8_categories():
    assert len(TAXONOMY) == 20
    assert len(set(MECHANISM_IDS)) == 20
    assert MECHANISM_IDS[0] == "rational_speculative_bubble"
    assert MECHANISM_IDS[-1] == "statistical_testing"
    assert {m.category for m in TAXONOMY} == set(CATEGORIES)


def test_prompt_contains_all_mechanisms_in_order():
    prompt = build_audit_prompt(context())
    positions = [prompt.index(f"\n{i}. {mid}\n")
                 for i, mid in enumerate(MECHANISM_IDS, start=1)]
    assert positions == sorted(positions)


def test_prompt_renders_context_fields():
    prompt = build_audit_prompt(context())
    assert "P=16 vs FV=14" in prompt
    assert "[0.0100, -0.0200, 0.0000, 0.0512]" in prompt
    assert 'Plan: "Plan to buy around 16."' in prompt
    assert "You are auditing LLM trading agents for behavioral biases." in prompt
    assert prompt == build_audit_prompt(context())  # byte-stable


def test_mock_judge_round_trip():
    report = parse_audit_response(mock_reply(), audited_text="Plan to buy around 16.")
    assert [a.mechanism_id for a in report.assessments] == list(MECHANISM_IDS)
    assert all(0 <= a.numeric_score <= 1 for a in report.assessments)
    assert all(0 <= a.confidence <= 1 for a in report.assessments)
    assert report.behavioral_bias_summary["bubble_awareness"] == "yes"


def test_mock_judge_score_shift_saturates_at_one():
    base = json.loads(mock_reply())
    shifted = json.loads(
        MockJudge(score_shift=0.2)(build_audit_prompt(context()), context()))
    for before, after in zip(base["mechanism_assessments"],
                             shifted["mechanism_assessments"]):
        assert after["numeric_score"] == pytest.approx(
            min(1.0, before["numeric_score"] + 0.2), abs=1e-9)


def mutate_reply(mutator):
    payload = json.loads(mock_reply())
    mutator(payload)
    return json.dumps(payload)


def test_missing_mechanism_rejected_by_name():
    def drop(payload):
        payload["mechanism_assessments"] = [
            e for e in payload["mechanism_assessments"]
            if e["mechanism_id"] != "loss_aversion"
        ]
    with pytest.raises(AuditParseError) as excinfo:
        parse_audit_response(mutate_reply(drop))
    assert any("missing mechanism: loss_aversion" in v for v in excinfo.value.violations)


def test_out_of_range_score_rejected():
    def inflate(payload):
        payload["mechanism_assessments"][0]["numeric_score"] = 1.2
    with pytest.raises(AuditParseError) as excinfo:
        parse_audit_response(mutate_reply(inflate))
    assert any("numeric_score 1.2" in v for v in excinfo.value.violations)


def test_unknown_label_rejected():
    def mislabel(payload):
        payload["mechanism_assessments"][3]["label"] = "bullish_vibes"
    with pytest.raises(AuditParseError) as excinfo:
        parse_audit_response(mutate_reply(mislabel))
    assert any("unknown label 'bullish_vibes'" in v for v in excinfo.value.violations)


def test_all_violations_collected_in_one_error():
    def wreck(payload):
        payload["mechanism_assessments"][0]["numeric_score"] = -0.5
        payload["mechanism_assessments"][1]["label"] = "nope"
        del payload["mechanism_assessments"][2:3]
    with pytest.raises(AuditParseError) as excinfo:
        parse_audit_response(mutate_reply(wreck))
    assert len(excinfo.value.violations) == 3


def test_unquoted_text_rejected():
    with pytest.raises(AuditParseError):
        parse_audit_response("I looked at the agent and it seems biased.")


def test_fabricated_evidence_downgrades_to_warning():
    def fabricate(payload):
        payload["mechanism_assessments"][0]["evidence_sentences"] = ["never said this"]
    report = parse_audit_response(mutate_reply(fabricate), audited_text="Plan to buy.")
    assert any("never said this" in w for w in report.warnings)


def test_stated_action_examples():
    assert extract_stated_action("I will buy and accumulate shares").value == 1
    assert extract_stated_action("sell now, then sell more, maybe buy").value == -1
    assert extract_stated_action("").value == 0
    assert extract_stated_action("the weather is nice").value == 0


def test_stated_action_stemming_and_boundaries():
    assert extract_stated_action("buying and bidding aggressively").value == 1
    assert extract_stated_action("liquidated everything, exiting").value == -1
    # "rebuy" has no word boundary before "buy"; must not count.
    assert extract_stated_action("rebuy is not a word here").value == 0


def test_stated_action_antisymmetry():
    lexicon = load_lexicon()
    swapped = Lexicon(buy=lexicon.sell, sell=lexicon.buy)
    for text in ("buy buy sell", "sell everything", "accumulate then exit then exit"):
        forward = extract_stated_action(text, lexicon).value
        backward = extract_stated_action(text, swapped).value
        assert forward == -backward


def test_shock_catalog_covers_all_mechanisms():
    for mid in MECHANISM_IDS:
        for direction in ("amplify", "suppress"):
            spec = make_shock(mid, direction)
            assert spec.mechanism_id == mid
            assert spec.direction == direction.capitalize()
            assert len(spec.clause) > 20


def test_momentum_suppression_clause_anchors_on_fundamentals():
    clause = make_shock("momentum_vs_newswatcher", "suppress").clause.lower()
    assert "fundamental value" in clause
    assert "trend" in clause


def test_unknown_shock_inputs_rejected():
    with pytest.raises(ConfigError):
        make_shock("fear_of_spiders", "amplify")
    with pytest.raises(ConfigError):
        make_shock("loss_aversion", "sideways")
