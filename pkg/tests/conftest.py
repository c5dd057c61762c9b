"""Shared helpers for building order books and scripted sessions."""

import pytest

from bubblelab import LimitOrder, OrderBook, ScriptedAgentConfig, Side
from bubblelab.session import SessionConfig, run_session


def bid(price, quantity, agent="b", seq=0):
    return LimitOrder(agent_id=agent, side=Side.BUY, price=price, quantity=quantity, seq=seq)


def ask(price, quantity, agent="s", seq=0):
    return LimitOrder(agent_id=agent, side=Side.SELL, price=price, quantity=quantity, seq=seq)


def book(bids, asks, round=1):
    return OrderBook(round=round, bids=list(bids), asks=list(asks))


def scripted_session(groups, seed, sims=1, out=None, params=None, shock=None, parallelism=1):
    kwargs = {} if params is None else {"params": params}
    config = SessionConfig(
        market_type="scripted",
        scripted_groups=[(count, ScriptedAgentConfig(**spec)) for count, spec in groups],
        seed=seed, n_simulations=sims, output_dir=out, shock=shock,
        parallelism=parallelism, **kwargs,
    )
    return run_session(config)


FUNDAMENTALIST_GROUPS = [(20, {"kind": "Fundamentalist"})]

BUBBLE_GROUPS = [
    (14, {"kind": "Extrapolator", "extrapolation_weights": (0.5, 0.3, 0.15, 0.05),
          "rng_seed": 1}),
    (6, {"kind": "Noise", "noise_scale": 3.0, "rng_seed": 2}),
]


@pytest.fixture(scope="session")
def bubble_session_dir(tmp_path_factory):
    """One shared extrapolator-dominant run with persisted artifacts."""
    out = tmp_path_factory.mktemp("bubble") / "session"
    scripted_session(BUBBLE_GROUPS, seed=11, sims=20, out=out)
    return out


@pytest.fixture(scope="session")
def fundamentalist_session_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fundamental") / "session"
    scripted_session(FUNDAMENTALIST_GROUPS, seed=7, sims=2, out=out)
    return out
