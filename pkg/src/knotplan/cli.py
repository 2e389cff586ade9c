"""Command-line entry point.

    knotplan run --trials N --seed S [--config FILE] [--out DIR]
                 [--noise SIGMA] [--depth-quant D] [--geodesic-mode arc|literal]
                 [--workers K] [--render]

Writes results.jsonl (deterministic), summary.csv, summary.json, and
optionally one SVG scene per trial. Exit code 0 once the batch completes,
regardless of individual trial failures; 2 on configuration errors.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError
from .harness import (
    ExperimentConfig,
    config_from_dict,
    results_to_csv,
    results_to_jsonl,
    run_trials,
)
from .render import render_scene


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knotplan",
        description="Knot-tying planning experiments on a simulated rope.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a batch of seeded tying trials")
    run_p.add_argument("--trials", type=int, required=True, help="number of trials")
    run_p.add_argument("--seed", type=int, required=True, help="master seed")
    run_p.add_argument("--config", type=Path, help="experiment config JSON")
    run_p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run_p.add_argument("--noise", type=float, help="observation noise sigma override (m)")
    run_p.add_argument("--depth-quant", type=float, help="depth quantization override (m)")
    run_p.add_argument(
        "--geodesic-mode",
        choices=["arc", "literal"],
        help="rope-distance mode used by the planner",
    )
    run_p.add_argument("--workers", type=int, help="parallel trial workers")
    run_p.add_argument("--render", action="store_true", help="write per-trial SVG scenes")
    return parser


def load_config(path: Path | None, args) -> ExperimentConfig:
    if path is not None:
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        config = config_from_dict(data)
    else:
        config = ExperimentConfig()
    if args.noise is not None:
        config = replace(config, observation=replace(config.observation, noise_sigma=args.noise))
    if args.depth_quant is not None:
        config = replace(
            config, observation=replace(config.observation, depth_quantization=args.depth_quant)
        )
    if args.geodesic_mode is not None:
        config = replace(config, planner=replace(config.planner, geodesic_mode=args.geodesic_mode))
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    return config


def cmd_run(args) -> int:
    try:
        config = load_config(args.config, args)
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    results, summary, artifacts = run_trials(
        args.trials, config, master_seed=args.seed, keep_artifacts=args.render
    )
    (out / "results.jsonl").write_text(results_to_jsonl(results))
    (out / "summary.csv").write_text(results_to_csv(results))
    summary_doc = dict(summary)
    summary_doc["config"] = config.to_dict()
    summary_doc["master_seed"] = args.seed
    (out / "summary.json").write_text(json.dumps(summary_doc, indent=2, sort_keys=True) + "\n")

    if args.render:
        for result, art in zip(results, artifacts):
            if art is None:
                continue
            final_curve, plans = art
            plan = plans[-1] if plans else None
            svg = render_scene(final_curve, plan, min_gap=config.min_gap)
            (out / f"trial_{result.trial}.svg").write_text(svg)

    per_move = summary["per_move"]
    print(
        f"trials={summary['trials']} successes={summary['successes']} "
        f"overall={summary['overall_rate']:.3f}"
    )
    for move in ("RI", "RII", "X"):
        info = per_move[move]
        print(
            f"  {move:<3} rate={info['rate']:.3f} "
            f"({info['passes']}/{info['attempts']} attempts)"
        )
    if summary["failure_reasons"]:
        print(f"  failures: {summary['failure_reasons']}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
