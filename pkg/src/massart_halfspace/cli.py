"""Command-line front end: `massart-halfspace <command> --config <path>`.

The positional command selects what to run; the config file carries the
rest. A `command` key inside the config is allowed but must agree with
the positional one. Precedence for the thread budget is flag, then the
environment variable, then the config file.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError
from .harness import (
    COMMANDS,
    EXIT_CONFIG,
    THREADS_ENV_VAR,
    config_from_mapping,
    parse_config_text,
    run,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="massart-halfspace",
        description="Halfspace learning and structural verification under bounded label noise.",
    )
    parser.add_argument("command", choices=COMMANDS, help="what to run")
    parser.add_argument("--config", required=True, help="path to a key=value or JSON config file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="base seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker budget (overrides config and env)")
    return parser


def _resolve_threads(flag_value: int | None) -> int | None:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(THREADS_ENV_VAR)
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        try:
            text = open(args.config).read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        flat = parse_config_text(text)
        declared = flat.get("command")
        if declared is not None and declared != args.command:
            raise ConfigError(
                f"config declares command {declared!r} but {args.command!r} was requested"
            )
        flat["command"] = args.command
        if args.out is not None:
            flat["out"] = args.out
        if args.seed is not None:
            if not (0 <= args.seed < 2**64):
                raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
            flat["base_seed"] = args.seed
        threads = _resolve_threads(args.threads)
        if threads is not None:
            flat["threads"] = threads
        config = config_from_mapping(flat)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
