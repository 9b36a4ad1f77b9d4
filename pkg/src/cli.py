"""Command-line entry point for the image-dimension lab"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src.lab.config import CHECK_NAMES, CoveringStudyConfig, ExperimentConfig, load_config, loads_config
from src.lab.errors import ConfigError, LabError
from src.lab.paths import simulate
from src.lab.processes import describe
from src.lab.reports import json_safe
from src.lab.rng import RngStream
from src.lab.runner import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATIONS, DimensionReport, run_experiment
from src.settings import configure_logging, default_output_dir, default_threads
from src.storage.path_store import DUMP_SUFFIX, write_path_dump

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markov-lab",
        description="Simulate Markov processes, estimate image dimensions and verify regularity conditions.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Exit codes: 0 all checks pass, 1 violations, 2 configuration error.",
    )
    parser.add_argument("--config", type=str, help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--threads", type=int, help="worker threads (default: LAB_THREADS or 1)")
    parser.add_argument("--out", type=str, help="output directory (default: LAB_OUTPUT_DIR or ./lab_output)")
    parser.add_argument("--dump-paths", action="store_true", help="also write simulated paths as binary dumps (.bin)")
    parser.add_argument("--log-level", type=str, help="logging level (default: LOG_LEVEL or INFO)")

    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate paths of the configured process")
    sim.add_argument("--process", type=str, help="inline JSON process block (overrides the config)")
    sim.add_argument("--T", type=float, help="horizon")
    sim.add_argument("--n-steps", type=int, help="grid steps per path")
    sim.add_argument("--n-paths", type=int, default=1, help="number of paths (default: 1)")

    sub.add_parser("dim", help="estimate image dimensions over the configured time sets")

    check = sub.add_parser("check", help="run condition checks (all configured blocks unless filtered)")
    for name in CHECK_NAMES:
        check.add_argument(f"--{name}", action="store_true", help=f"run the {name} blocks")

    cover = sub.add_parser("cover", help="cover-count statistics along dyadic families")
    cover.add_argument("--mode", choices=("image", "preimage"), help="cover family")
    cover.add_argument("--gamma", type=float, help="exponent of theta_n (image) or t_n (preimage)")
    cover.add_argument("--ns", type=int, nargs="+", help="dyadic levels n")

    sub.add_parser("experiment", help="dimension sets, checks and covering study from one config")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
    else:
        if args.seed is None:
            raise ConfigError("give --config or at least --seed; runs are never seeded from the clock", "seed")
        config = loads_config(json.dumps({"seed": args.seed}), "<cli>")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed, raw={**config.raw, "seed": args.seed})
    if args.dump_paths:
        config = dataclasses.replace(config, dump_paths=True)
    return config


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return Path(args.out or config.output_dir or default_output_dir())


def _select(args: argparse.Namespace, config: ExperimentConfig) -> ExperimentConfig:
    """Restrict the config to what the subcommand runs."""
    if args.command == "dim":
        return dataclasses.replace(config, checks=(), covering=None)
    if args.command == "check":
        wanted = {name for name in CHECK_NAMES if getattr(args, name)}
        blocks = tuple(b for b in config.checks if not wanted or b.check in wanted)
        return dataclasses.replace(config, sets=(), covering=None, checks=blocks)
    if args.command == "cover":
        study = config.covering or CoveringStudyConfig()
        overrides = {k: v for k, v in (("mode", args.mode), ("gamma", args.gamma)) if v is not None}
        if args.ns:
            overrides["ns"] = tuple(args.ns)
        return dataclasses.replace(config, sets=(), checks=(), covering=dataclasses.replace(study, **overrides))
    return config


def _simulate(args: argparse.Namespace, config: ExperimentConfig, out_dir: Path) -> int:
    if args.process:
        config = dataclasses.replace(config, process=loads_config(
            json.dumps({"seed": config.seed, "process": json.loads(args.process)}), "--process").process)
    if config.process is None:
        raise ConfigError("no process: give --process or a config with a process block", "process")
    T = args.T or config.T
    n_steps = args.n_steps or config.n_steps
    stream = RngStream(config.seed).spawn("simulate")
    paths = [simulate(config.process, config.x0, T, n_steps, stream.spawn("path", p)) for p in range(args.n_paths)]
    target = write_path_dump(out_dir / f"paths{DUMP_SUFFIX}", paths)
    summary = {"process": describe(config.process), "T": T, "n_steps": n_steps, "n_paths": len(paths),
               "seed": config.seed, "dump": str(target),
               "endpoints": [p.values[-1].tolist() for p in paths]}
    print(json.dumps(json_safe(summary), indent=2))
    return EXIT_OK


def _print_summary(report: DimensionReport) -> None:
    for row in report.rows:
        verdict = {True: "PASS", False: "FAIL", None: "INFO"}[row.passed]
        print(f"[{verdict}] {row.label}: predicted={row.predicted} measured={row.measured:.4f} "
              f"CI=[{row.ci_lo:.4f}, {row.ci_hi:.4f}] flags={','.join(row.flags) or '-'}")
    for check in report.checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] check {check.check}: "
              f"{len(check.violations)} violation(s) over {len(check.grid)} cells")
    for row in report.covering:
        print(f"[INFO] covering n={row.n}: max={row.max_count} q95={row.q95:.1f} tail_slope={row.tail_slope:.3f}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = _load(args)
        out_dir = _out_dir(args, config)
        if args.command == "simulate":
            return _simulate(args, config, out_dir)
        threads = args.threads or config.threads or default_threads()
        report = run_experiment(_select(args, config), threads=threads, out_dir=out_dir)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except LabError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_VIOLATIONS
    _print_summary(report)
    logger.info(f"Artifacts written to {out_dir}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
