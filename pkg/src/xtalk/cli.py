"""Operator entry points: serve, bench, replay, validate."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import signal
import sys
from pathlib import Path

from .bench import DEFAULT_LANGS, DEFAULT_LENGTHS, run_bench
from .config import dump_config, load_config
from .errors import BindError, ConfigError, ScenarioMissing
from .replay import SessionScenario, list_scenarios, run_scenario
from .runtime import AppRuntime
from .server import serve_forever

logger = logging.getLogger(__name__)


def _setup_logging() -> None:
    level = os.environ.get("XTALK_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def cmd_serve(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.listen:
        import dataclasses

        config = dataclasses.replace(config, listen=args.listen)
    runtime = AppRuntime(config)

    async def _main() -> None:
        task = asyncio.ensure_future(serve_forever(runtime))
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, task.cancel)
        try:
            await task
        except asyncio.CancelledError:
            pass

    asyncio.run(_main())
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    lengths = (
        tuple(float(x) for x in args.lengths.split(",")) if args.lengths else DEFAULT_LENGTHS
    )
    langs = tuple(args.langs.split(",")) if args.langs else DEFAULT_LANGS
    report = asyncio.run(run_bench(config, lengths=lengths, langs=langs))
    print(report.table())
    if args.out:
        report.write_jsonl(args.out)
        print(f"rows written to {args.out}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else None
    scenario = SessionScenario.load(args.scenario)
    lines = asyncio.run(run_scenario(scenario, config))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(lines)} frames -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    print(dump_config(config))
    return 0


def cmd_scenarios(_: argparse.Namespace) -> int:
    print(json.dumps(list_scenarios(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xtalk",
        description="Full-duplex speech-to-speech orchestration engine (mock backends)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the WebSocket endpoint")
    p_serve.add_argument("--config", default=None, help="config JSON path")
    p_serve.add_argument("--listen", default=None, help="host:port override")
    p_serve.set_defaults(func=cmd_serve)

    p_bench = sub.add_parser("bench", help="run the latency bench grid")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--lengths", default=None, help="comma list of seconds, e.g. 5,10")
    p_bench.add_argument("--langs", default=None, help="comma list: cn,en")
    p_bench.add_argument("--out", default=None, help="JSON-lines output path")
    p_bench.set_defaults(func=cmd_bench)

    p_replay = sub.add_parser("replay", help="replay a scripted session to a frame log")
    p_replay.add_argument("--scenario", required=True, help="scenario name or JSON path")
    p_replay.add_argument("--out", default=None, help="log output path")
    p_replay.add_argument("--config", default=None)
    p_replay.set_defaults(func=cmd_replay)

    p_validate = sub.add_parser("validate", help="validate a config file and echo it")
    p_validate.add_argument("--config", default=None)
    p_validate.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("scenarios", help="list bundled replay scenarios")
    p_list.set_defaults(func=cmd_scenarios)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioMissing, BindError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
