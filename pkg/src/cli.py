"""Command-line entry point.

Exit codes: 0 success, 1 analysis violations, 2 I/O, parse or configuration
errors, 3 budget exceeded. Results go to stdout (or ``--output``); diagnostics,
traces and the run manifest go to stderr (or ``--manifest``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .commands import execute_command, known_commands
from .config import ENGINE_VERSION, Settings, load_settings, setup_logging
from .errors import ConfigError
from .helpers import EXIT_INPUT

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    command: str
    inputs: Dict[str, Optional[str]]
    seed: int
    config: Dict[str, Any]
    engine_version: str = ENGINE_VERSION
    started_at: float = field(default_factory=time.time)
    seconds: float = 0.0
    exit_code: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, separators=(",", ":"))


def _multipliers(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--program", help="weighted program file")
    parser.add_argument("--facts", help="fact file (.dl or .csv)")
    parser.add_argument("--builtin", help="name of a shipped program, e.g. running-example")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML settings file")
    parser.add_argument("--log-level", dest="log_level")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", help="write results here instead of stdout")
    parser.add_argument("--manifest", help="write the run manifest here instead of stderr")


def _add_mcmc_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--lambda", dest="jump_rate", type=float,
                        help="mean number of steps per proposal (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softchase", description="Probabilistic reasoning over weighted warded programs."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, help=text) for name, text in known_commands.items()}

    for name in ("check", "chase", "ground", "infer", "sample", "eval"):
        _add_input_flags(parsers[name])
    for p in parsers.values():
        _add_common_flags(p)

    parsers["chase"].add_argument("--trace", action="store_true",
                                  help="print every rule application to stderr")
    for name in ("ground", "infer", "eval"):
        parsers[name].add_argument("--budget", type=int, help="maximum chase-network nodes")

    infer = parsers["infer"]
    infer.add_argument("--query", help="predicate name or rule-form conjunctive query")
    infer.add_argument("--mode", choices=("exact", "mcmc"), default="exact")
    infer.add_argument("--format", choices=("tsv", "csv"), default="tsv")
    _add_mcmc_flags(infer)
    _add_mcmc_flags(parsers["sample"])

    gen = parsers["gen"]
    gen.add_argument("--topology", choices=("base", "dense", "super-dense"), default="base")
    gen.add_argument("--nodes", type=int, default=100)
    gen.add_argument("--alpha", type=float)
    gen.add_argument("--beta", type=float)
    gen.add_argument("--gamma", type=float)
    gen.add_argument("--corruption", type=float, default=0.0,
                     help="fraction of shares pushed above 1")

    ev = parsers["eval"]
    ev.add_argument("--graph", help="ownership edge CSV from gen")
    ev.add_argument("--query", help="predicate whose marginals are compared")
    ev.add_argument("--multipliers", type=_multipliers, default=[1, 10, 100])
    ev.add_argument("--repetitions", type=int, default=5)
    ev.add_argument("--skip-exact", action="store_true", dest="skip_exact")
    ev.add_argument("--estimator", choices=("trajectory", "network"), default="trajectory")
    ev.add_argument("--facts-report", action="store_true", dest="facts_report",
                    help="append per-fact rows of the largest configuration")
    ev.add_argument("--format", choices=("tsv", "csv"), default="csv")
    ev.add_argument("--lambda", dest="jump_rate", type=float)
    ev.add_argument("--jobs", type=int)
    return parser


def _settings(args: argparse.Namespace) -> Settings:
    overrides = {
        "seed": getattr(args, "seed", None),
        "grounding_budget": getattr(args, "budget", None),
        "iterations": getattr(args, "iterations", None),
        "jump_rate": getattr(args, "jump_rate", None),
        "jobs": getattr(args, "jobs", None),
        "log_level": getattr(args, "log_level", None),
    }
    return load_settings(overrides, getattr(args, "config", None))


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
    started = time.perf_counter()

    try:
        settings = _settings(args)
    except ConfigError as e:
        sys.stderr.write(f"{e.diagnostic().as_line()}\n")
        return EXIT_INPUT
    setup_logging(settings.log_level)

    params = {k: v for k, v in vars(args).items() if k != "command"}
    params["settings"] = settings
    result = execute_command(args.command, params)
    data = result.get("data") or {}

    if result["status"] == "pass" or "output" in data:
        _emit(data.get("output", ""), args.output)
    for line in data.get("trace", ()):
        sys.stderr.write(line + "\n")
    if result["status"] == "fail":
        for line in data.get("diagnostics", ()):
            sys.stderr.write(line + "\n")
        if result.get("error"):
            sys.stderr.write(f"error: {result['error']}\n")

    manifest = RunManifest(
        command=args.command,
        inputs={k: getattr(args, k, None) for k in ("program", "facts", "builtin", "graph")},
        seed=settings.seed,
        config=settings.as_dict(),
        seconds=round(time.perf_counter() - started, 6),
        exit_code=result.get("exit_code", 0),
    )
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as f:
            f.write(manifest.to_json() + "\n")
    else:
        sys.stderr.write(manifest.to_json() + "\n")
    logger.debug("Finished %s in %.3fs", args.command, manifest.seconds)
    return manifest.exit_code


__all__ = ["RunManifest", "build_parser", "main"]
