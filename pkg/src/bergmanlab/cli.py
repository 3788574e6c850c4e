"""Command line front end: configure an experiment, run it, emit reports.

Precedence: built-in defaults for the experiment, then fields from the JSON
config file, then command line flags (flag names mirror config fields).
Exit status: 0 all verdicts as expected, 1 usage or config error, 2 a
quantity grew where a bound was expected, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    default_config,
    emit_report,
    run_experiment,
)

_OVERRIDES = (
    ("--map", str, "conformal map name, e.g. identity, quadratic:0.25, log_example"),
    ("--weight", str, "weight name, e.g. const:1, power:0.5, derivsq:log_example"),
    ("--p", float, "integrability exponent p"),
    ("--p0", float, "endpoint exponent p0 in [1, 2)"),
    ("--s", float, "weak reverse Holder exponent in (0, 1)"),
    ("--q", float, "regularization mean exponent, q >= 1"),
    ("--theta", float, "mixed-mean tilt, theta < 1/2"),
    ("--depth-min", int, "shallowest mesh depth"),
    ("--depth-max", int, "deepest mesh depth"),
    ("--quad-order", int, "Gauss nodes per cell and direction"),
    ("--lambda-count", int, "points on the level sweep grid"),
    ("--growth-factor", float, "per-depth ratio that counts as growth"),
    ("--seed", int, "random seed echoed into the report"),
    ("--out", str, "output directory for emitted files"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bergman-lab",
        description="Dyadic harmonic analysis experiments on the unit disk and conformal images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run one experiment and emit its report")
    runp.add_argument("--experiment", help="experiment name (see 'bergman-lab list')")
    runp.add_argument("--config", help="path to a JSON config file")
    runp.add_argument("--format", choices=("csv", "human", "both"), default="both",
                      help="report format (default: both)")
    for flag, typ, desc in _OVERRIDES:
        runp.add_argument(flag, type=typ, default=None, help=desc)

    sub.add_parser("list", help="list available experiments")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        data = json.loads(path.read_text())
        if not isinstance(data, dict):
            raise ConfigError("constraint violated: config must be a JSON object")
    unknown = sorted(set(data) - set(ExperimentConfig.__dataclass_fields__))
    if unknown:
        raise ConfigError(f"constraint violated: unknown config fields {unknown}")
    experiment = args.experiment or data.get("experiment")
    if experiment is None:
        raise ConfigError("an experiment must be named via --experiment or the config file")
    cfg = default_config(experiment) if experiment in EXPERIMENTS else ExperimentConfig(experiment)
    for key, value in data.items():
        setattr(cfg, key, value)
    cfg.experiment = experiment
    for flag, _, _ in _OVERRIDES:
        name = flag.lstrip("-").replace("-", "_")
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


def _cmd_run(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"bergman-lab: {exc}", file=sys.stderr)
        return 1
    report = run_experiment(cfg)
    formats = ("csv", "human") if args.format == "both" else (args.format,)
    written = []
    for fmt in formats:
        written.extend(emit_report(report, fmt))
    print(f"experiment: {cfg.experiment}  (wall clock {report.wall_clock:.2f}s)")
    for path in written:
        print(f"wrote {path}")
    for q in sorted(report.verdicts):
        print(f"verdict {q}: {report.verdicts[q]} (expected {report.expected[q]})")
    print(f"exit: {report.exit_code}")
    return report.exit_code


def _cmd_list() -> int:
    width = max(len(name) for name in EXPERIMENTS)
    for name, (_, desc) in EXPERIMENTS.items():
        print(f"{name:<{width}}  {desc}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
