"""Panel record persistence: schema header, lossless round-trip, CSV layout."""

import json
from decimal import Decimal

import pytest

from bubblelab.errors import SchemaVersionError
from bubblelab.panel import (
    SCHEMA_VERSION,
    AgentRoundRecord,
    ForecastRecord,
    RoundRecord,
    derive_dummies,
    forecasts_to_csv,
    read_jsonl,
    write_jsonl,
)


def round_record(period, price=14):
    return RoundRecord(sim=0, period=period, price=price, crossed=True, volume=2,
                       dividend="0.4", bid_orders=3, ask_orders=2,
                       bid_shares=5, ask_shares=4)


def test_schema_header_is_first_line(tmp_path):
    path = tmp_path / "rounds.jsonl"
    write_jsonl(path, [round_record(1)])
    first = path.read_text().splitlines()[0]
    assert json.loads(first) == {"schema": SCHEMA_VERSION}


def test_round_trip_is_lossless(tmp_path):
    path = tmp_path / "rounds.jsonl"
    records = [round_record(p, price=14 + p) for p in range(1, 21)]
    write_jsonl(path, records)
    loaded = read_jsonl(path, RoundRecord)
    assert loaded == records
    # Re-serialization is byte-identical.
    second = tmp_path / "again.jsonl"
    write_jsonl(second, loaded)
    assert second.read_bytes() == path.read_bytes()


def test_schema_mismatch_reports_versions(tmp_path):
    path = tmp_path / "rounds.jsonl"
    path.write_text(json.dumps({"schema": "bubblelab/0"}) + "\n")
    with pytest.raises(SchemaVersionError) as excinfo:
        read_jsonl(path, RoundRecord)
    assert excinfo.value.expected == SCHEMA_VERSION
    assert excinfo.value.found == "bubblelab/0"


def test_missing_realized_is_null_not_zero(tmp_path):
    record = ForecastRecord(sim=0, agent="a0", period=15, horizon=10, forecast=14,
                            price_at_forecast=14)
    path = tmp_path / "forecasts.jsonl"
    write_jsonl(path, [record])
    line = json.loads(path.read_text().splitlines()[1])
    assert line["realized"] is None
    assert line["error"] is None


def test_forecast_csv_layout(tmp_path):
    records = [
        ForecastRecord(sim=0, agent="a0", period=1, horizon=0, forecast=15,
                       price_at_forecast=14, realized=14, error=-1),
        ForecastRecord(sim=0, agent="a0", period=19, horizon=5, forecast=14,
                       price_at_forecast=14),
    ]
    path = tmp_path / "forecasts.csv"
    forecasts_to_csv(records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sim,agent,t,h,f,realized,error"
    assert lines[1] == "0,a0,1,0,15,14,-1"
    assert lines[2] == "0,a0,19,5,14,,"


def test_derive_dummies_definitions():
    # 1 buy vs 2 sell orders, net executed -1, prior price above WAPP.
    buy, sell, gain = derive_dummies(1, 2, -1, prior_price=18, wapp=Decimal("16"))
    assert (buy, sell, gain) == (0, 1, 1)
    buy, sell, gain = derive_dummies(2, 1, 3, prior_price=14, wapp=Decimal("14"))
    assert (buy, sell, gain) == (1, 0, 0)  # price equal to WAPP is not a gain


def test_agent_round_record_round_trip(tmp_path):
    record = AgentRoundRecord(
        sim=0, agent="a0", period=1,
        submitted_buy_orders=1, submitted_sell_orders=1,
        submitted_buy_shares=2, submitted_sell_shares=2,
        enforced_buy_orders=1, enforced_sell_orders=1,
        enforced_buy_shares=2, enforced_sell_shares=2,
        executed_buy_shares=1, executed_sell_shares=0,
        executed_buy_cash="14.0000", executed_sell_cash="0.0000",
        cash="90.0000", shares=5, wapp="14.0000", portfolio_value="160.0000",
        buy_dummy=1, sell_dummy=0, gain_dummy=0, forfeited=False,
    )
    path = tmp_path / "agent_rounds.jsonl"
    write_jsonl(path, [record])
    assert read_jsonl(path, AgentRoundRecord) == [record]
