"""Command-line entry point.

    shadowkit <command> --config FILE [--seed S] [--threads K] [--out DIR]
              [--override dotted.path=value ...]

Commands: generate, predict, classify, pca, invariant, shadow-bench.
Flags override config keys; every run writes CSV tables plus JSON sidecars
with the fully resolved config, and identical seeds reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import accel, experiments
from .errors import ConfigError, ShadowkitError

_COMMANDS = {
    "generate": experiments.cmd_generate,
    "predict": experiments.cmd_predict,
    "classify": experiments.cmd_classify,
    "pca": experiments.cmd_pca,
    "invariant": experiments.cmd_invariant,
    "shadow-bench": experiments.cmd_shadow_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shadowkit",
        description="Classical-shadow tomography experiments at desk scale",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=Path, help="JSON experiment config")
        cmd.add_argument("--seed", type=int, default=None, help="override root seed")
        cmd.add_argument(
            "--threads", type=int, default=None, help="cap worker threads"
        )
        cmd.add_argument(
            "--out", type=Path, default=None, help="output directory"
        )
        cmd.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="PATH=VALUE",
            help="set a dotted config key, e.g. family.n=8",
        )
    return parser


def load_config(args) -> tuple[dict, Path]:
    config: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
    for item in args.override:
        if "=" not in item:
            raise ConfigError(f"override must look like path=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        experiments.apply_override(config, dotted, raw)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.threads is not None:
        config["threads"] = args.threads
    out_dir = args.out if args.out is not None else Path(config.get("out_dir", "out"))
    config["out_dir"] = str(out_dir)
    return config, out_dir


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config, out_dir = load_config(args)
        if config.get("threads"):
            accel.set_num_threads(int(config["threads"]))
        result = _COMMANDS[args.command](config, out_dir)
    except ShadowkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    printable = {
        k: v for k, v in result.items() if isinstance(v, (int, float, str, list, dict))
    }
    print(json.dumps(printable, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
