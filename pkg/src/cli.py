from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import reporting
from .config import RunConfig, get_log_level, load_run_config
from .errors import NumericalError
from .storage import write_manifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

FIGURES = ("regimes", "bifurcation", "period", "eigtraj")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopf-delay",
        description="Delay-induced oscillations in logistic gene-regulatory loops.",
    )
    parser.add_argument("--config", type=Path, help="TOML or JSON run config")
    parser.add_argument("--out", type=Path, help="output directory (overrides HOPF_OUT_DIR)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--rtol", type=float)
    parser.add_argument("--atol", type=float)
    parser.add_argument("--threads", type=int)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", help="closed-form Hopf report for the configured two-gene loop")

    tables = sub.add_parser("tables", help="regenerate a reference table as CSV")
    tables.add_argument("which", type=int, choices=(1, 2, 3, 4))

    sub.add_parser("sweep", help="DDE amplitude and period over the tau grid")

    integ = sub.add_parser("integrate", help="integrate one trajectory to CSV")
    integ.add_argument("--tau", type=float, help="total delay, split evenly (default: config delays)")
    integ.add_argument("--t-end", type=float, default=100.0)
    integ.add_argument("--resolution", type=float, default=0.01)

    trace = sub.add_parser("trace", help="continue the leading characteristic root in tau")
    trace.add_argument("--tau-max", type=float, default=0.6)
    trace.add_argument("--step", type=float, default=reporting.TRACE_STEP)

    sub.add_parser("ngene", help="Hopf report for the configured cyclic N-gene loop")
    sub.add_parser("lyapunov", help="criticality coefficient across delay splits")

    mc = sub.add_parser("montecarlo", help="criticality sign over random strong-feedback loops")
    mc.add_argument("--samples", type=int)

    p53 = sub.add_parser("calibrate-p53", help="calibrate the loop gain to an observed delay and half-life")
    p53.add_argument("--half-life", type=float)
    p53.add_argument("--delay", type=float)
    p53.add_argument("--observed-period", type=float)

    sub.add_parser("hill-compare", help="Hopf locus of the logistic model against its Hill counterpart")

    figs = sub.add_parser("figures", help="regenerate a figure as SVG with backing CSV")
    figs.add_argument("which", choices=FIGURES)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by explicit command-line flags."""
    cfg = load_run_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.rtol is not None:
        overrides["rtol"] = args.rtol
    if args.atol is not None:
        overrides["atol"] = args.atol
    if args.threads is not None:
        overrides["threads"] = max(1, min(args.threads, 64))
    if getattr(args, "samples", None) is not None:
        overrides["n_samples"] = args.samples
    if getattr(args, "half_life", None) is not None:
        overrides["half_life"] = args.half_life
    if getattr(args, "delay", None) is not None:
        overrides["delay"] = args.delay
    if getattr(args, "observed_period", None) is not None:
        overrides["observed_period"] = args.observed_period
    return replace(cfg, **overrides)


def dispatch(args: argparse.Namespace, cfg: RunConfig) -> List[Path]:
    out = cfg.out_dir
    command = args.command
    if command == "analyze":
        return reporting.cmd_analyze(cfg, out)
    if command == "tables":
        return reporting.cmd_tables(cfg, args.which, out)
    if command == "sweep":
        return reporting.cmd_sweep(cfg, out)
    if command == "integrate":
        return reporting.cmd_integrate(cfg, out, tau=args.tau, t_end=args.t_end, resolution=args.resolution)
    if command == "trace":
        return reporting.cmd_trace(cfg, out, tau_max=args.tau_max, step=args.step)
    if command == "ngene":
        return reporting.cmd_ngene(cfg, out)
    if command == "lyapunov":
        return reporting.cmd_lyapunov(cfg, out)
    if command == "montecarlo":
        return reporting.cmd_montecarlo(cfg, out)
    if command == "calibrate-p53":
        return reporting.cmd_calibrate_p53(cfg, out)
    if command == "hill-compare":
        return reporting.cmd_hill_compare(cfg, out)
    if command == "figures":
        return reporting.cmd_figures(cfg, args.which, out)
    raise ValueError(f"unknown command {command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors map to 1 here
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        format="%(levelname)s: %(message)s",
        level=logging.DEBUG if args.verbose else get_log_level(),
    )
    try:
        cfg = resolve_config(args)
        files = dispatch(args, cfg)
        manifest = write_manifest(cfg.out_dir, command=args.command, files=files, config=cfg.resolved())
        logger.info("Wrote %d file(s) and %s", len(files), manifest)
    except NumericalError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
