"""Command line entry point.

    autotag <command> [--config FILE] [--set key=value ...] [flags]

Commands: synth, extract, weights, train, annotate, eval. Flags
override config file keys; --set accepts any config key. Exit codes:
0 success, 2 configuration error, 3 data error, 4 numerical
divergence.
"""

import argparse
import sys

from .config import build_config, parse_config_file
from .errors import ConfigError, DataError, DivergenceError
from .pipeline import (run_annotate, run_eval, run_extract, run_synth,
                       run_train, run_weights)

COMMANDS = {
    "synth": run_synth,
    "extract": run_extract,
    "weights": run_weights,
    "train": run_train,
    "annotate": run_annotate,
    "eval": run_eval,
}

_FLAG_KEYS = ("manifest", "out_dir", "embeddings", "checkpoint",
              "predictions", "seed", "epochs", "lr", "workers")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="autotag",
        description="image annotation pipeline: feature extraction, "
                    "balanced training, five-tag decoding and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override any config key")
        for key in _FLAG_KEYS:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key)
    return parser


def _collect_config(args):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return build_config(file_values, overrides)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _collect_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
