"""Command line entry point: ``rvloopfuzz <verb> ...``.

Exit codes: 0 clean, 1 mismatches found, 2 configuration error.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO

import structlog

from .. import __version__
from ..coverage import Instrumentation, build_mapper, extract_control_registers, load_netlist
from ..coverage import mapper_summary
from ..genmut import Lfsr, read_iteration
from ..harness import run_iteration
from ..hybrid import bundled_benchmarks, run_stage1
from ..isa import default_library
from ..logging import configure_logging
from ..models import CampaignConfig, MapperScheme, Outcome
from ..validation import ConfigurationError, FuzzerError
from .merge import merge_shards
from .reports import ReportFormat, emit_report, load_stats, stats_csv, stats_json
from .runner import INTERVALS_JSON, run_campaign, shard_dir
from .settings import ENV_PREFIX, effective_config_json, load_campaign_config
from .streams import Streams

logger = structlog.get_logger(__name__)

EXIT_CLEAN = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", type=str, help="campaign config file (JSON)")
    parser.add_argument("--env-file", type=str, help="dotenv file with RVLOOPFUZZ_* overrides")
    parser.add_argument(
        "--print-effective-config",
        action="store_true",
        help="print the validated config with overrides applied and exit",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvloopfuzz", description="Closed-loop RISC-V processor fuzzer."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", type=str, help="override the configured log level")
    parser.add_argument(
        "--log-format", choices=["json", "console"], help="override the configured log format"
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    fuzz = verbs.add_parser("fuzz", help="run a fuzzing campaign")
    _add_config_options(fuzz)
    fuzz.add_argument("-o", "--output", type=str, help="artifact directory")
    fuzz.add_argument("--shard", type=int, help="run only this shard (default: all, in turn)")

    replay = verbs.add_parser("replay", help="re-run one iteration from its dump")
    _add_config_options(replay)
    replay.add_argument("DUMP", type=str, help="iteration dump file")
    replay.add_argument(
        "--bug", dest="bugs", action="append", default=None, help="bug id to inject (repeatable)"
    )
    replay.add_argument("--snapshot-dir", type=str, help="where to write a mismatch snapshot")

    instrument = verbs.add_parser("instrument", help="print coverage reachability of a netlist")
    instrument.add_argument("NETLIST", type=str, help="netlist IR file")
    instrument.add_argument(
        "--scheme", choices=[s.value for s in MapperScheme], default=MapperScheme.SEQUENTIAL.value
    )
    instrument.add_argument("--max-state-size", type=int, default=14)
    instrument.add_argument("--seed", type=int, default=1, help="LFSR seed for legacy shifts")

    explore = verbs.add_parser("deepexplore", aliases=["explore"], help="run hybrid stage 1 only")
    _add_config_options(explore)
    explore.add_argument("-o", "--output", type=str, help="artifact directory")
    explore.set_defaults(verb="deepexplore")

    merge = verbs.add_parser("merge", help="merge shard artifacts")
    merge.add_argument("SHARDS", nargs="+", type=str, help="shard directories")
    merge.add_argument("-o", "--output", type=str, required=True, help="merged artifact directory")

    report = verbs.add_parser("report", help="render a stats document as csv or json")
    report.add_argument("STATS", type=str, help="stats.json file or shard directory")
    report.add_argument("--format", choices=[f.value for f in ReportFormat], default="csv")
    report.add_argument("-o", "--output", type=str, help="output file (default: stdout)")

    return parser


def _configure_logging(args: argparse.Namespace, config: Optional[CampaignConfig] = None) -> None:
    level = args.log_level or (config.log_level if config else None)
    level = level or os.environ.get(ENV_PREFIX + "LOG_LEVEL", "INFO")
    fmt = args.log_format or (config.log_format if config else "json")
    configure_logging(
        app_name="rv-loopfuzz",
        version=__version__,
        json_output=fmt == "json",
        log_level=level,
    )


def _load_config(args: argparse.Namespace) -> CampaignConfig:
    return load_campaign_config(args.config, args.env_file)


def _coverage_rng(config: CampaignConfig) -> Lfsr:
    return Streams.derive(config.master_seed, 0, config.mode.lfsr_width).coverage


def _print_json(document: Any, out: TextIO) -> None:
    out.write(json.dumps(document, indent=2, sort_keys=True) + "\n")


def cmd_fuzz(args: argparse.Namespace, config: CampaignConfig, out: TextIO) -> int:
    output = args.output or config.output_dir
    shards = [args.shard] if args.shard is not None else list(range(config.shards))
    for shard in shards:
        if not 0 <= shard < config.shards:
            raise ConfigurationError(
                f"shard {shard} is outside 0..{config.shards - 1}", config_key="shards"
            )
    results = [run_campaign(config, shard, output) for shard in shards]
    summary: Dict[str, Any] = {
        "config_hash": config.config_hash(),
        "shards": {
            str(r.stats.shards[0]): {
                "directory": str(r.directory),
                "iterations": len(r.stats.records),
                "coverage": r.stats.final_coverage,
                "mismatches": len(r.stats.mismatches),
            }
            for r in results
        },
    }
    if len(results) > 1:
        view = merge_shards([r.directory for r in results], Path(output) / "merged")
        summary["merged"] = {
            "directory": str(Path(output) / "merged"),
            "coverage": view.covmap.total,
            "mismatches": len(view.stats.mismatches),
        }
    _print_json(summary, out)
    found = any(r.stats.mismatches for r in results)
    return EXIT_MISMATCH if found else EXIT_CLEAN


def cmd_replay(args: argparse.Namespace, config: CampaignConfig, out: TextIO) -> int:
    library = default_library().with_enabled(config.categories)
    try:
        iteration = read_iteration(args.DUMP, library)
    except OSError as e:
        raise ConfigurationError(f"cannot read {args.DUMP}: {e}", config_key="DUMP", cause=e) from e
    instrumentation = Instrumentation.build(config.coverage, rng=_coverage_rng(config))
    report = run_iteration(
        iteration,
        config.harness,
        instrumentation,
        instrumentation.new_map(),
        bugs=args.bugs,
        snapshot_dir=args.snapshot_dir,
        name=Path(args.DUMP).stem,
    )
    _print_json(report.model_dump(mode="json"), out)
    return EXIT_MISMATCH if report.mismatch is not None else EXIT_CLEAN


def cmd_instrument(args: argparse.Namespace, out: TextIO) -> int:
    try:
        netlist = load_netlist(args.NETLIST)
    except OSError as e:
        raise ConfigurationError(
            f"cannot read {args.NETLIST}: {e}", config_key="NETLIST", cause=e
        ) from e
    rng = Lfsr(args.seed)
    modules: Dict[str, Any] = {}
    for module in netlist:
        regs = extract_control_registers(module)
        if not regs:
            modules[module.name] = {"registers": [], "instrumented": 0, "reachable": 0}
            continue
        mapper = build_mapper(MapperScheme(args.scheme), regs, args.max_state_size, rng)
        modules[module.name] = mapper_summary(mapper)
    _print_json({"netlist": args.NETLIST, "modules": modules}, out)
    return EXIT_CLEAN


def cmd_deepexplore(args: argparse.Namespace, config: CampaignConfig, out: TextIO) -> int:
    hybrid = config.hybrid
    benchmarks = bundled_benchmarks(hybrid.benchmarks, config.harness, hybrid.benchmark_scale)
    instrumentation = Instrumentation.build(config.coverage, rng=_coverage_rng(config))
    result = run_stage1(benchmarks, hybrid, config.harness, instrumentation)
    directory = shard_dir(args.output or config.output_dir, 0)
    path = result.report().write_json(directory / INTERVALS_JSON, indent=2)
    _print_json(
        {
            "intervals": len(result.intervals),
            "marked": len(result.marked),
            "coverage_gain": result.total_gain,
            "budget": result.budget,
            "total_instructions": result.total_instructions,
            "report": str(path),
        },
        out,
    )
    found = any(i.outcome is Outcome.MISMATCH for i in result.intervals)
    return EXIT_MISMATCH if found else EXIT_CLEAN


def cmd_merge(args: argparse.Namespace, out: TextIO) -> int:
    view = merge_shards(args.SHARDS, args.output)
    _print_json(
        {
            "shards": view.stats.shards,
            "records": len(view.stats.records),
            "coverage": view.covmap.total,
            "mismatches": len(view.stats.mismatches),
            "output": args.output,
        },
        out,
    )
    return EXIT_MISMATCH if view.stats.mismatches else EXIT_CLEAN


def cmd_report(args: argparse.Namespace, out: TextIO) -> int:
    stats = load_stats(args.STATS)
    if args.output:
        emit_report(stats, args.output, args.format)
    else:
        out.write(stats_csv(stats) if args.format == "csv" else stats_json(stats))
    return EXIT_CLEAN


CONFIG_VERBS = {"fuzz": cmd_fuzz, "replay": cmd_replay, "deepexplore": cmd_deepexplore}


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Run one CLI verb and return its exit code."""
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        if args.verb in CONFIG_VERBS:
            config = _load_config(args)
            if args.print_effective_config:
                out.write(effective_config_json(config) + "\n")
                return EXIT_CLEAN
            if not (args.log_level or args.log_format):
                _configure_logging(args, config)
            return CONFIG_VERBS[args.verb](args, config, out)
        if args.verb == "instrument":
            return cmd_instrument(args, out)
        if args.verb == "merge":
            return cmd_merge(args, out)
        return cmd_report(args, out)
    except FuzzerError as e:
        sys.stderr.write(json.dumps({"error": e.to_dict()}, default=str) + "\n")
        return EXIT_CONFIG
    except OSError as e:
        logger.error("io_error", error=str(e), filename=getattr(e, "filename", None))
        return EXIT_CONFIG


__all__ = ["EXIT_CLEAN", "EXIT_CONFIG", "EXIT_MISMATCH", "build_parser", "main"]


if __name__ == "__main__":
    sys.exit(main())
