#!/usr/bin/env python3
"""
Shock-tube experiment driver for the kbgk solver.
Runs presets or custom configs and compares profile files.
"""

import logging
import sys
from typing import List, Optional

from kbgk.config import parse_config
from kbgk.errors import ConfigError, KBGKError
from kbgk.experiment import compare_profiles, run_batch
from kbgk.presets import list_presets
from kbgk.utils import format_summary

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def print_presets() -> None:
    print("\nAvailable presets:")
    for preset in list_presets():
        print(f"  {preset.number}: {preset.description}")
        for name in preset.variants:
            print(f"      - {name}")


def cmd_run(args) -> int:
    if args.list_presets:
        print_presets()
        return EXIT_OK

    overrides = {"preset": args.preset, "output_dir": args.output, "rng_seed": args.seed}
    if args.progress:
        overrides["progress"] = True
    config = parse_config(args.config, overrides)

    results, failures = run_batch(config, output_dir=config.output_dir, parallel=args.parallel,
                                  workers=args.workers)
    print(format_summary([r.stats for r in results], failures))
    return EXIT_SOLVER_FAILURE if failures else EXIT_OK


def cmd_compare(args) -> int:
    norms = compare_profiles(args.a, args.b)
    print(norms.to_string(float_format=lambda v: f"{v:.6e}"))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    import argparse

    parser = argparse.ArgumentParser(description="Semi-Lagrangian BGK shock-tube experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run a config file or preset")
    run.add_argument("--config", help="Flat JSON config file")
    run.add_argument("--preset", type=int, help="Preset number (overrides the config file)")
    run.add_argument("--output", help="Output directory (overrides the config file)")
    run.add_argument("--seed", type=int, help="Seed for jittered grids")
    run.add_argument("--parallel", action="store_true", help="Run preset variants in separate processes")
    run.add_argument("--workers", type=int, help="Number of worker processes (capped by KBGK_THREADS)")
    run.add_argument("--progress", action="store_true", help="Show a time-step progress bar")
    run.add_argument("--list-presets", action="store_true", help="List available presets and exit")
    run.add_argument("--verbose", action="store_true", help="Enable debug logging")

    compare = subparsers.add_parser("compare", help="Error norms between two profile CSV files")
    compare.add_argument("--a", required=True, help="Profile CSV")
    compare.add_argument("--b", required=True, help="Reference profile CSV")
    compare.add_argument("--verbose", action="store_true", help="Enable debug logging")

    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    handlers = {"run": cmd_run, "compare": cmd_compare}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except KBGKError as e:
        logger.error(f"Run failed: {e}")
        return EXIT_SOLVER_FAILURE
    except (OSError, ValueError, KeyError) as e:
        # Unreadable or mismatched profile files in compare
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
