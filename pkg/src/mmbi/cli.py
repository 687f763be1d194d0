"""Command-line entry point: ``mmbi bounds | chain | plan``.

Every subcommand also accepts ``--config FILE`` holding a JSON object whose
keys mirror the long flag names (dashes or underscores); flags given on the
command line take precedence. Set ``MMBI_WORKERS`` to run chain experiments
on several processes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from mmbi.belief import load_belief
from mmbi.bounds import bound_sweep, random_ensemble, sweep_to_csv
from mmbi.evaluation import ExperimentConfig, experiment, write_results
from mmbi.mdp import FiniteMdp
from mmbi.planner import msbi

ERROR_PREFIX = "mmbi-error"


class CliError(Exception):
    pass


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in str(text).split(",") if x.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmbi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="value-function bounds along a belief path (CSV)")
    b.add_argument("--config")
    b.add_argument("--mdps", default="random:0", help="JSON file with 8 MDPs, or random:SEED")
    b.add_argument("--grid", type=int, default=21)
    b.add_argument("--gamma", type=float, default=0.95)
    b.add_argument("--horizon", type=int, default=50)
    b.add_argument("--out", help="output CSV path (default: stdout)")

    c = sub.add_parser("chain", help="Chain-task comparison of Exploit and MCBRL")
    c.add_argument("--config")
    c.add_argument("--agents", type=_csv_list(str), default=["exploit", "mcbrl"])
    c.add_argument("--n", type=_csv_list(int), default=[1, 8, 16])
    c.add_argument("--runs", type=int, default=1000)
    c.add_argument("--steps", type=int, default=1000)
    c.add_argument("--gamma", type=float, default=0.95)
    c.add_argument("--B", type=int, default=20, help="MCBRL replanning interval")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--resamples", type=int, default=10_000, help="bootstrap resamples")
    c.add_argument("--out", default="chain_results")

    p = sub.add_parser("plan", help="MSBI plan for a serialized belief (JSON)")
    p.add_argument("--config")
    p.add_argument("--belief", help="belief JSON file")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, help="override the epsilon-derived horizon")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read config {args.config}: {e}") from None
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions or dest == "config":
            raise CliError(f"unknown config key {key!r} for '{args.command}'")
        action = actions[dest]
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        elif action.type is not None and isinstance(value, list):
            value = action.type(",".join(map(str, value)))
        defaults[dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _load_mdps(source: str) -> list[FiniteMdp]:
    if source.startswith("random:"):
        try:
            seed = int(source.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad MDP source {source!r}; expected random:SEED") from None
        return random_ensemble(np.random.default_rng(seed))
    try:
        data = json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read MDP file {source}: {e}") from None
    if isinstance(data, dict):
        data = data.get("mdps")
    if not isinstance(data, list):
        raise CliError("MDP file must hold a JSON list of MDPs or {\"mdps\": [...]}")
    return [FiniteMdp.from_dict(d) for d in data]


def cmd_bounds(args) -> int:
    if args.grid < 2:
        raise CliError("--grid must be at least 2")
    rows = bound_sweep(_load_mdps(args.mdps), args.grid, args.gamma, args.horizon)
    text = sweep_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_chain(args) -> int:
    if args.runs < 1 or args.steps < 1 or args.B < 1 or any(n < 1 for n in args.n):
        raise CliError("counts must be positive")
    config = ExperimentConfig(
        agents=args.agents, n_values=args.n, runs=args.runs, steps=args.steps, gamma=args.gamma,
        replan_interval=args.B, seed=args.seed, bootstrap_resamples=args.resamples,
    )
    result = experiment(config)
    for path in write_results(result, args.out):
        logging.getLogger(__name__).info("wrote %s", path)
    for c in result.cells:
        print(
            f"{c.label:>10}  total {c.report.mean_total:8.1f} [{c.report.ci_low:.1f}, {c.report.ci_high:.1f}]"
            f"  utility {c.mean_utility:6.2f}  regret {c.report.regret:7.1f}"
        )
    return 0


def cmd_plan(args, parser) -> int:
    if not args.belief:
        parser.error("plan: --belief is required")
    try:
        belief = load_belief(args.belief)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        raise CliError(f"malformed belief file {args.belief}: {e}") from None
    _, result = msbi(
        belief, args.gamma, args.epsilon, np.random.default_rng(args.seed),
        n_override=args.n, horizon=args.horizon,
    )
    out = result.to_dict()
    out["n"] = args.n
    print(json.dumps(out))
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
        if args.command == "bounds":
            return cmd_bounds(args)
        if args.command == "chain":
            return cmd_chain(args)
        return cmd_plan(args, parser)
    except (CliError, ValueError, KeyError, OSError) as e:
        msg = " ".join(str(e).split())
        print(f"{ERROR_PREFIX}: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
