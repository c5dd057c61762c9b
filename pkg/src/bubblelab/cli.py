"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime invariant
violation, 4 model transport exhaustion.
"""

import functools
import json
import sys
from pathlib import Path

import click
import pandas as pd

import tomli

from . import analytics
from .audit import MockJudge, audit_reasoning, endpoint_judge, make_shock, shock_comparison
from .errors import BubbleLabError, ConfigError, InvariantViolation
from .gateway import ModelConfig, TransportError
from .agents import ScriptedAgentConfig
from .panel import SCHEMA_VERSION
from .params import MarketParams
from .session import SessionConfig, run_session


def _exit_codes(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except InvariantViolation as exc:
            click.echo(f"invariant violation: {exc}", err=True)
            sys.exit(3)
        except TransportError as exc:
            click.echo(f"transport failure: {exc}", err=True)
            sys.exit(4)
        except BubbleLabError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


@click.group()
def main():
    """Deterministic laboratory for multi-period experimental asset markets."""


def _scripted_group(entry: dict):
    count = int(entry.pop("count", 1))
    if "extrapolation_weights" in entry:
        entry["extrapolation_weights"] = tuple(entry["extrapolation_weights"])
    if "horizon_multipliers" in entry:
        entry["horizon_multipliers"] = tuple(
            (int(h), float(m)) for h, m in entry["horizon_multipliers"]
        )
    return count, ScriptedAgentConfig(**entry)


def load_config(path, seed=None, sims=None, out=None, shock=None, parallel=None) -> SessionConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}")

    session = dict(raw.get("session", {}))
    params = MarketParams.from_dict(raw.get("params", {}))
    groups = [_scripted_group(dict(g)) for g in raw.get("agents", [])]

    def model(section):
        if section not in raw:
            return None
        return ModelConfig(**raw[section])

    shock_spec = None
    shock_raw = raw.get("shock")
    if shock is not None:
        mechanism, _, direction = shock.partition(":")
        shock_spec = make_shock(mechanism, direction or "amplify")
    elif shock_raw:
        shock_spec = make_shock(shock_raw["mechanism"], shock_raw.get("direction", "amplify"))

    try:
        config = SessionConfig(
            market_type=session.get("market_type", "scripted"),
            params=params,
            seed=seed if seed is not None else int(session.get("seed", 0)),
            n_simulations=sims if sims is not None else int(session.get("n_simulations", 1)),
            output_dir=Path(out) if out else None,
            shock=shock_spec,
            scripted_groups=groups,
            model_a=model("model_a"),
            model_b=model("model_b"),
            n_agents=int(session.get("n_agents", 20)),
            parallelism=parallel if parallel is not None else int(session.get("parallelism", 1)),
        )
    except TypeError as exc:
        raise ConfigError(str(exc))
    _check_credentials(config)
    return config


def _check_credentials(config: SessionConfig) -> None:
    import os
    for model in (config.model_a, config.model_b):
        if model is not None and not model.is_mock():
            if not os.environ.get(model.api_key_env):
                raise ConfigError(
                    f"live endpoint {model.endpoint} requires the "
                    f"{model.api_key_env} environment variable"
                )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--sims", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--shock", default=None, help="mechanism_id:amplify|suppress")
@click.option("--parallel", type=int, default=None)
@click.option("--force", is_flag=True, help="overwrite an existing output directory")
@_exit_codes
def run(config_path, seed, sims, out, shock, parallel, force):
    """Run a configured session and write the artifact directory."""
    config = load_config(config_path, seed=seed, sims=sims, out=out,
                         shock=shock, parallel=parallel)
    if config.output_dir is not None and config.output_dir.exists() and not force:
        raise ConfigError(
            f"output directory {config.output_dir} exists; pass --force to overwrite"
        )
    artifacts = run_session(config)
    for result in artifacts.results:
        click.echo(f"sim {result.sim}: MSE(FV) = {result.mse_fv:.4f}")
    rounds = pd.DataFrame([vars(r) for r in artifacts.rounds])
    path = analytics.price_path_summary(rounds)
    click.echo("mean price path: " +
               " ".join(f"{p:.1f}" for p in path.mean_price))
    if config.output_dir is not None:
        click.echo(f"artifacts written to {config.output_dir}")


@main.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path())
@_exit_codes
def validate_config(config_path):
    """Parse and validate a config file without running anything."""
    config = load_config(config_path)
    click.echo(f"ok: {config.market_label()}, seed {config.seed}, "
               f"{config.n_simulations} simulation(s)")


@main.command()
@click.option("--analysis", "analysis_id", required=True,
              type=click.Choice(analytics.ANALYSIS_IDS))
@click.option("--in", "in_dirs", required=True, multiple=True, type=click.Path())
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.option("--plot", "plot_svg", type=click.Path(), default=None)
@click.option("--bid-offer-unit", type=click.Choice(["shares", "orders"]), default="shares")
@click.option("--expectation-form", type=click.Choice(["return", "level"]), default="return")
@click.option("--scores", "scores_path", type=click.Path(), default=None,
              help="audit scores JSONL (bubble_episode_diffs only)")
@_exit_codes
def analyze(analysis_id, in_dirs, out_csv, plot_svg, bid_offer_unit,
            expectation_form, scores_path):
    """Run one named analysis over session artifacts and write a CSV table."""
    panel = analytics.load_panel(list(in_dirs))
    spec = analytics.AnalysisSpec(
        analysis_id, bid_offer_unit=bid_offer_unit,
        avg_expectation_form=expectation_form,
    )
    if analysis_id == "disposition":
        table = analytics.results_to_frame(analytics.disposition_analysis(panel, spec))
    elif analysis_id == "expectation_formation":
        table = analytics.results_to_frame(
            analytics.expectation_formation_analysis(panel, spec))
    elif analysis_id == "expectation_trading":
        table = analytics.results_to_frame(
            analytics.expectation_trading_analysis(panel, spec))
    elif analysis_id == "bid_offer":
        table = analytics.results_to_frame(analytics.bid_offer_analysis(panel, spec))
    elif analysis_id == "disagreement_volume":
        table = analytics.results_to_frame(
            analytics.disagreement_volume_analysis(panel, spec))
    elif analysis_id == "bubble_metrics":
        metrics = analytics.bubble_metrics(panel)
        table = pd.DataFrame([
            {"market_type": k, "mse_fv": v.mse_fv,
             "pv_variance": v.pv_variance, "n_rounds": v.n_rounds}
            for k, v in metrics.items()
        ])
    else:  # bubble_episode_diffs
        if not scores_path:
            raise ConfigError("bubble_episode_diffs needs --scores from the audit command")
        scores = _read_scores(scores_path)
        table = analytics.bubble_episode_diffs(scores, panel)
    table.to_csv(out_csv, index=False)
    click.echo(f"wrote {out_csv} ({len(table)} rows)")
    if plot_svg:
        analytics.plot_price_paths(panel.rounds, plot_svg,
                                   fundamental_value=panel.fundamental_value)
        click.echo(f"wrote {plot_svg}")


def _read_scores(path) -> pd.DataFrame:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != SCHEMA_VERSION:
            raise ConfigError(f"unexpected scores schema: {header.get('schema')!r}")
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return pd.DataFrame(rows)


def _write_scores(frame: pd.DataFrame, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema": SCHEMA_VERSION}) + "\n")
        for row in frame.to_dict(orient="records"):
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _make_judge(judge: str):
    if judge == "mock":
        return MockJudge()
    if judge.startswith("mock+"):
        return MockJudge(score_shift=float(judge.split("+", 1)[1]))
    return endpoint_judge(ModelConfig(endpoint=judge, model="judge"))


def _audit_dir(session_dir, judge) -> pd.DataFrame:
    panel = analytics.load_panel([session_dir])
    meta = json.loads((Path(session_dir) / "session.meta").read_text())
    reasoning = panel.reasoning[panel.reasoning.period >= 1]
    return audit_reasoning(
        reasoning, panel.rounds, meta.get("market_type", "unknown"),
        analytics.FUNDAMENTAL_VALUE, judge,
    )


@main.command()
@click.option("--in", "session_dir", required=True, type=click.Path())
@click.option("--judge", default="mock", help="'mock', 'mock+<shift>', or an endpoint URL")
@click.option("--out", "out_path", required=True, type=click.Path())
@_exit_codes
def audit(session_dir, judge, out_path):
    """Score every agent-round's reasoning against the mechanism taxonomy."""
    scores = _audit_dir(session_dir, _make_judge(judge))
    _write_scores(scores, out_path)
    click.echo(f"wrote {out_path} ({len(scores)} scores)")


@main.command("shock-study")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--mechanism", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--judge", default="mock")
@click.option("--sims", type=int, default=None)
@_exit_codes
def shock_study(config_path, mechanism, out_dir, judge, sims):
    """Run benchmark, amplify, and suppress arms with a shared seed and
    emit the per-mechanism comparison table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for arm in ("benchmark", "amplify", "suppress"):
        shock = None if arm == "benchmark" else f"{mechanism}:{arm}"
        config = load_config(config_path, sims=sims, out=out / arm, shock=shock)
        run_session(config)
        tables[arm] = _audit_dir(out / arm, _make_judge(judge))
        _write_scores(tables[arm], out / f"scores_{arm}.jsonl")
        click.echo(f"{arm} arm complete ({len(tables[arm])} scores)")
    comparison = shock_comparison(tables["amplify"], tables["suppress"],
                                  tables["benchmark"])
    comparison.to_csv(out / "comparison.csv", index=False)
    click.echo(f"wrote {out / 'comparison.csv'}")


@main.command()
@click.option("--in", "in_dirs", required=True, multiple=True, type=click.Path())
@click.option("--out-svg", required=True, type=click.Path())
@click.option("--out-csv", required=True, type=click.Path())
@_exit_codes
def plot(in_dirs, out_svg, out_csv):
    """Mean price path with 95% band, volume bars, and the FV line."""
    panel = analytics.load_panel(list(in_dirs))
    analytics.plot_price_paths(panel.rounds, out_svg, out_csv,
                               fundamental_value=panel.fundamental_value)
    click.echo(f"wrote {out_svg} and {out_csv}")


if __name__ == "__main__":
    main()
