"""Command-line entry point: `sim run` and `sim validate`."""

import argparse
import json
import sys

from . import harness


def _parse_sweep(text: str):
    name, _, values = text.partition("=")
    if not values:
        raise argparse.ArgumentTypeError("sweep must look like name=v1,v2,...")
    parsed = []
    for tok in values.split(","):
        try:
            parsed.append(int(tok))
        except ValueError:
            parsed.append(float(tok))
    return name, parsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="High-mobility refracting-surface link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", required=True, help="JSON or TOML config file")
    run.add_argument("--scenario", help="override the scenario tag")
    run.add_argument("--sweep", type=_parse_sweep, help="name=v1,v2,... sweep override")
    run.add_argument("--trials", type=int, help="override n_trials")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--out", required=True, help="output directory")

    val = sub.add_parser("validate", help="validate a config and exit")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config)
        if args.command == "validate":
            print(f"ok: {args.config}")
            return 0
        if args.scenario is not None:
            cfg.scenario = args.scenario
        if args.sweep is not None:
            cfg.sweep_name, cfg.sweep_values = args.sweep
        if args.trials is not None:
            cfg.n_trials = args.trials
        if args.seed is not None:
            cfg.master_seed = args.seed
        harness.validate_config(cfg)
        report = harness.run_experiment(cfg)
        written = harness.emit_report(report, args.out)
        for row in report.rows:
            print(json.dumps(row, default=str))
        print(f"wrote {len(written)} files to {args.out}")
        return 0
    except (harness.ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
