"""Prompt-shock study with the deterministic mock judge.

Runs benchmark, amplify, and suppress arms for one mechanism, audits the
recorded reasoning, and prints the per-mechanism arm comparison. With
`--judge mock+0.2` on the amplify arm the pipeline should recover a 0.2
score shift; the two benchmark arms give the null reference.
"""

import argparse
from pathlib import Path

from bubblelab import ScriptedAgentConfig
from bubblelab.analytics import load_panel
from bubblelab.audit import MockJudge, audit_reasoning, make_shock, shock_comparison
from bubblelab.session import SessionConfig, run_session

GROUPS = [
    (6, ScriptedAgentConfig(kind="Extrapolator",
                            extrapolation_weights=(0.5, 0.3, 0.15, 0.05), rng_seed=1)),
    (4, ScriptedAgentConfig(kind="Noise", noise_scale=3.0, rng_seed=2)),
]


def run_arm(out, seed, sims, shock, judge):
    config = SessionConfig(market_type="scripted", scripted_groups=GROUPS,
                           seed=seed, n_simulations=sims, output_dir=out, shock=shock)
    run_session(config)
    panel = load_panel([out])
    reasoning = panel.reasoning[panel.reasoning.period >= 1]
    return audit_reasoning(reasoning, panel.rounds, "scripted", 14, judge)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out/shock_study"))
    parser.add_argument("--mechanism", default="momentum_vs_newswatcher")
    parser.add_argument("--seed", type=int, default=31)
    parser.add_argument("--sims", type=int, default=3)
    parser.add_argument("--planted-shift", type=float, default=0.2,
                        help="score shift planted in the amplify arm's judge")
    args = parser.parse_args()

    benchmark = run_arm(args.out / "benchmark", args.seed, args.sims,
                        shock=None, judge=MockJudge())
    amplify = run_arm(args.out / "amplify", args.seed, args.sims,
                      shock=make_shock(args.mechanism, "amplify"),
                      judge=MockJudge(score_shift=args.planted_shift))
    suppress = run_arm(args.out / "suppress", args.seed, args.sims,
                       shock=make_shock(args.mechanism, "suppress"),
                       judge=MockJudge())

    comparison = shock_comparison(amplify, suppress, benchmark)
    comparison.to_csv(args.out / "comparison.csv", index=False)
    row = comparison[comparison.mechanism_id == args.mechanism].iloc[0]
    print(f"{args.mechanism}: amplify vs benchmark "
          f"diff={row.amp_vs_bench_diff:.4f} t={row.amp_vs_bench_t:.2f}")
    print(f"wrote {args.out / 'comparison.csv'}")


if __name__ == "__main__":
    main()
