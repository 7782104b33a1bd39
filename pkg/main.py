"""
wealthkin - joint wealth and knowledge kinetic simulator
Command-line entry point
"""

from pathlib import Path
from typing import Dict, List, Optional
import argparse
import logging
import sys

from config.settings import (
    RunConfig, list_presets, load_preset, parse_grid, parse_value, split_values,
)
from core.application import create_application
from core.errors import ConfigError, WealthKinError

logger = logging.getLogger('wealthkin.cli')

EXIT_OK = 0
EXIT_ERROR = 2


def _add_config_arguments(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group()
    source.add_argument('--preset', help=f"Named preset ({', '.join(list_presets())})")
    source.add_argument('--config', type=Path, help="TOML config or a bundle's config.json")
    parser.add_argument('--set', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help="Override a config value (repeatable)")
    parser.add_argument('--out', type=Path, help="Output directory")
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help="Console log level")


def _add_run_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('--seed', type=int, help="Master seed")
    parser.add_argument('--n', type=int, help="Number of agents")
    parser.add_argument('--workers', type=int, help="Worker threads for the particle solver")
    parser.add_argument('--strict', action='store_true',
                        help="Fail when a tail fit has fewer than 10 samples")


def _add_fp_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('--grid', help="Grid size as NXxNV, e.g. 200x200")
    parser.add_argument('--equation', choices=['fp', 'fp2'],
                        help="fp recomputes the mean wealth each step, fp2 freezes it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='wealthkin',
        description="Kinetic simulation of joint wealth and knowledge distributions",
    )
    commands = parser.add_subparsers(dest='command', required=True)

    simulate = commands.add_parser('simulate', help="Monte Carlo run to an output bundle")
    _add_config_arguments(simulate)
    _add_run_arguments(simulate)

    fp = commands.add_parser('fp', help="Fokker-Planck run to an output bundle")
    _add_config_arguments(fp)
    _add_fp_arguments(fp)

    analyze = commands.add_parser('analyze', help="Analysis outputs for a snapshot CSV")
    analyze.add_argument('snapshot', type=Path, help="CSV with columns x,v")
    _add_config_arguments(analyze)
    analyze.add_argument('--strict', action='store_true',
                         help="Fail when a tail fit has fewer than 10 samples")

    compare = commands.add_parser('compare', help="Distances between two bundles")
    compare.add_argument('bundle_a', type=Path)
    compare.add_argument('bundle_b', type=Path)
    compare.add_argument('--out', type=Path, help="Directory for comparison.csv")
    compare.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    sweep = commands.add_parser('sweep', help="One bundle per point of a parameter grid")
    _add_config_arguments(sweep)
    _add_run_arguments(sweep)
    _add_fp_arguments(sweep)
    sweep.add_argument('--mode', choices=['simulate', 'fp'], default='simulate')

    return parser


def parse_assignments(items: List[str]) -> Dict[str, List]:
    """``section.key=v1,v2`` strings to {dotted key: [parsed values]}"""
    assignments = {}
    for item in items:
        key, sep, text = item.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        values = [parse_value(part) for part in split_values(text)]
        if not values:
            raise ConfigError(f"--set {key}: no value given")
        assignments[key.strip()] = values
    return assignments


def resolve_config(args: argparse.Namespace, sweep: bool = False):
    """
    Preset or config file, then --set overrides, then dedicated flags

    Returns:
        (config, sweep assignments); the assignments are empty unless sweeping
    """
    if getattr(args, 'preset', None):
        config = load_preset(args.preset)
    elif getattr(args, 'config', None):
        config = RunConfig.load(args.config)
    else:
        config = RunConfig()

    assignments = parse_assignments(getattr(args, 'set', []))
    fixed = {k: v[0] for k, v in assignments.items() if len(v) == 1}
    varying = {k: v for k, v in assignments.items() if len(v) > 1}
    if varying and not sweep:
        raise ConfigError(f"multiple values are only allowed with sweep: {', '.join(varying)}")

    flags = {}
    if getattr(args, 'seed', None) is not None:
        flags['seed'] = args.seed
    if getattr(args, 'n', None) is not None:
        flags['simulation.n_agents'] = args.n
    if getattr(args, 'workers', None) is not None:
        flags['simulation.workers'] = args.workers
    if getattr(args, 'grid', None):
        nx, nv = parse_grid(args.grid)
        flags['fokker_planck.nx'] = nx
        flags['fokker_planck.nv'] = nv
    if getattr(args, 'equation', None):
        flags['fokker_planck.equation'] = args.equation
    if getattr(args, 'out', None) is not None:
        flags['output.directory'] = str(args.out)
    if getattr(args, 'log_level', None):
        flags['logging.level'] = args.log_level

    config = config.with_overrides({**fixed, **flags})
    return config, varying


def run_command(args: argparse.Namespace) -> int:
    if args.command == 'compare':
        config = RunConfig()
        if args.log_level:
            config.logging.level = args.log_level
        varying = {}
    else:
        config, varying = resolve_config(args, sweep=args.command == 'sweep')

    app = create_application(config)
    logger.debug(f"Running '{args.command}' with seed {config.seed}")
    try:
        if args.command == 'simulate':
            app.simulate(strict_tail=args.strict)
        elif args.command == 'fp':
            app.solve_fp()
        elif args.command == 'analyze':
            out = args.out or args.snapshot.parent / "analysis"
            app.analyze(args.snapshot, out, strict_tail=args.strict)
        elif args.command == 'compare':
            comparison = app.compare(args.bundle_a, args.bundle_b, args.out)
            comparison.to_csv(sys.stdout, index=False)
        elif args.command == 'sweep':
            if not varying:
                raise ConfigError("sweep needs at least one --set SECTION.KEY=V1,V2,...")
            app.sweep(varying, mode=args.mode, strict_tail=args.strict)
    finally:
        app.cleanup()
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    try:
        return run_command(args)
    except WealthKinError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
