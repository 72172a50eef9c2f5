"""Command line front end: scenario files in, run directories out.

Exit codes: 0 success, 2 configuration problem (parse error, unknown or
missing key, under-resolved grid), 3 runtime failure (caustics, escaping
mass, anything that only shows up while integrating).
"""

from __future__ import annotations

import argparse
import configparser
import sys
import time
from pathlib import Path

from .experiments import (
    ScenarioError,
    rung_plans,
    run_sweep,
    scenario_from_mapping,
    write_run_dir,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_mapping(path: str, overrides, seed=None):
    """Scenario file plus --set/--seed overrides as {section: {key: str}}."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as err:
        raise ScenarioError(f"cannot read scenario file: {err}")
    except configparser.Error as err:
        raise ScenarioError(f"scenario file syntax: {err}")
    mapping = {section: dict(parser.items(section))
               for section in parser.sections()}
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not section or not name:
            raise ScenarioError(
                f"--set expects section.key=value, got {item!r}")
        mapping.setdefault(section.strip(), {})[name.strip()] = value.strip()
    if seed is not None:
        mapping.setdefault("scenario", {})["seed"] = str(seed)
    return mapping


def _describe(scenario, plans):
    for plan in plans:
        grid = "x".join(str(p) for p in plan.grid.points)
        need = "x".join(str(r) for r in plan.required)
        steps = plan.steps_per_output * scenario.n_outputs
        print(f"  divisor {plan.divisor:<10g} hbar {plan.hbar:<12.6g} "
              f"grid {grid:<12} required {need:<12} dt {plan.dt:<12.6g} "
              f"steps {steps}")


def cmd_validate(args) -> int:
    mapping = _load_mapping(args.scenario, args.set, args.seed)
    scenario = scenario_from_mapping(mapping)
    plans = rung_plans(scenario)
    print(f"scenario {scenario.name} ({scenario.kind}), seed {scenario.seed}, "
          f"{len(plans)} rungs")
    _describe(scenario, plans)
    print("ok: configuration valid")
    return EXIT_OK


def cmd_run(args) -> int:
    mapping = _load_mapping(args.scenario, args.set, args.seed)
    scenario = scenario_from_mapping(mapping)
    plans = rung_plans(scenario)
    print(f"scenario {scenario.name} ({scenario.kind}), seed {scenario.seed}, "
          f"{len(plans)} rungs")
    _describe(scenario, plans)
    started = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    report = run_sweep(scenario, jobs=args.jobs)
    finished = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    written = write_run_dir(report, args.out, started=started,
                            finished=finished)
    print(f"wrote {len(written)} files to {Path(args.out)}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semiclassical",
        description="hbar-sweep scenario runner (natural units)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file (INI sections)")
    common.add_argument("--set", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override one scenario entry")
    common.add_argument("--seed", type=int, default=None,
                        help="override scenario.seed")

    run_p = sub.add_parser("run", parents=[common],
                           help="run the sweep and write a run directory")
    run_p.add_argument("--out", required=True,
                       help="output directory for the run")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="max concurrent hbar rungs")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", parents=[common],
                           help="check a scenario and print per-rung sizing")
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as err:
        field = f" [{err.field}]" if err.field else ""
        print(f"configuration error{field}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # caustics, escaping mass, solver failures
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
