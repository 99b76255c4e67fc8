"""Command-line entry point: ``thzqkd <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import sys

from .config import ExperimentConfig
from .errors import InvalidConfigError, ResultWriteError, ThzQkdError, TrialAbortedError
from .experiment import emit_results, render, single_point, sweep, threshold_analysis

COMMANDS = {
    "sweep-distance": "distance",
    "sweep-pilot-duration": "pilot_len",
    "sweep-pilot-power": "pilot_power",
    "threshold-analysis": "noise_sigma_h",
    "single-point": None,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thzqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config (all keys optional)")
        p.add_argument("--out", help="output file; stdout when omitted")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=("genie", "ml"))
        p.add_argument("--workers", type=int)
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("trials", "seed", "mode", "workers")
                 if getattr(args, k) is not None}
    return cfg.replace(**overrides) if overrides else cfg


def run(args) -> int:
    cfg = load_config(args)
    axis = COMMANDS[args.command]
    if axis is None:
        result = single_point(cfg)
    elif axis == "noise_sigma_h":
        result = threshold_analysis(cfg)
    else:
        result = sweep(cfg, axis)
    if args.out:
        emit_results(result, args.out, args.format)
    else:
        sys.stdout.write(render(result, args.format))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except TrialAbortedError as exc:
        print(json.dumps(exc.diagnostic()), file=sys.stderr)
        return 3
    except ResultWriteError as exc:
        print(json.dumps({"error": "ResultWriteError", "path": exc.path, "message": str(exc)}),
              file=sys.stderr)
        return 4
    except InvalidConfigError as exc:
        print(json.dumps({"error": "InvalidConfigError", "message": str(exc)}), file=sys.stderr)
        return 2
    except ThzQkdError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
