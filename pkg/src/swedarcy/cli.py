"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import SCENARIOS, ConfigError, RunConfig, builtin_config, load_config
from .drivers import run_convergence, run_showcase, run_single, write_report
from .framework import StepError
from .linalg import SolverError
from .mesh import DryingError
from .output import OutputError
from .swe import NumericalFailure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (NumericalFailure, DryingError, SolverError, FloatingPointError)

log = logging.getLogger("swedarcy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swedarcy", description="Coupled free-surface and groundwater flow solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_default=None):
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: from the config)")
        p.add_argument("--levels", type=int, default=None, metavar="J", help="finest refinement level")
        p.add_argument("--degree", type=int, default=None, metavar="P", help="polynomial degree")
        p.add_argument("--quiet", action="store_true", help="only report errors")
        if scenario_default is not None:
            p.add_argument(
                "--scenario", choices=SCENARIOS[:-1], default=scenario_default,
                help=f"built-in scenario when no --config is given (default: {scenario_default})",
            )
        return p

    common(sub.add_parser("run", help="run the simulation described by --config"))
    common(sub.add_parser("convergence", help="manufactured-solution convergence study"), "table1-darcy")
    common(sub.add_parser("showcase", help="channel flow over an obstacle"), "showcase").add_argument(
        "--t-end", type=float, default=None, help="end time in seconds"
    )
    v = sub.add_parser("validate-config", help="check a configuration and print it normalised")
    v.add_argument("--config", type=Path, required=True)
    v.add_argument("--quiet", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    if args.config is not None:
        config = load_config(args.config)
    elif getattr(args, "scenario", None) is not None:
        config = builtin_config(args.scenario)
    else:
        raise ConfigError("--config is required")
    changes = {}
    if args.levels is not None:
        changes["levels"] = args.levels
    if args.degree is not None:
        changes["degrees"] = (args.degree,)
    if getattr(args, "t_end", None) is not None:
        changes["time"] = config.time.model_copy(update={"t_end": args.t_end}).model_dump()
    try:
        return config.with_overrides(**changes) if changes else config
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _expect(config: RunConfig, kinds: tuple[str, ...], command: str):
    if config.kind not in kinds:
        raise ConfigError(f"'{command}' cannot run a configuration of kind {config.kind!r}")


def execute(args) -> int:
    if args.command == "validate-config":
        config = load_config(args.config)
        if not args.quiet:
            print(config.to_json())
        return EXIT_OK

    config = resolve_config(args)
    out = args.out if args.out is not None else Path(config.output.directory)
    say = (lambda *a: None) if args.quiet else print

    if args.command == "convergence":
        _expect(config, ("convergence",), "convergence")
    elif args.command == "showcase":
        _expect(config, ("showcase",), "showcase")

    if config.kind == "convergence":
        report = run_convergence(config, on_level=lambda r: say(f"p={r.p} j={r.j} done in {r.runtime:.1f} s"))
        say(report.format())
        if config.output.csv:
            say(f"wrote {write_report(report, out)}")
    elif config.kind == "showcase":
        result = run_showcase(config, out)
        say(f"showcase reached t={result.state.t:g} s; wrote {len(result.files)} VTK files to {out}")
    else:
        result = run_single(config, out)
        say(f"{config.kind} run reached t={result.state.t:g}; wrote {len(result.files)} VTK files to {out}")
        if result.report is not None:
            say(result.report.format())
            if config.output.csv:
                say(f"wrote {write_report(result.report, out)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return execute(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepError as exc:
        if isinstance(exc.__cause__, NUMERICAL_ERRORS):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        if isinstance(exc.__cause__, (ValueError, KeyError)):
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OutputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
