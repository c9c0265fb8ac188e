"""Command line entry point: ``mmwave-interference run|validate|preset``.

Exit codes: 0 success, 1 configuration error, 2 numerical non-convergence,
3 I/O error. Failures print a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .exceptions import ConfigError, ConvergenceError
from .experiment import (
    ENGINES,
    PRESETS,
    ExperimentSpec,
    dump_spec,
    load_spec,
    preset,
    run_experiment,
    validation_report,
)
from .montecarlo import MODES

EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed of the Monte Carlo engine")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per curve")
    p.add_argument("--engines", help=f"comma-separated subset of {','.join(ENGINES)}")
    p.add_argument("--output-dir", help="directory for CSVs, manifest and plot script")
    p.add_argument("--workers", type=int, help="worker processes for the Monte Carlo engine")
    p.add_argument("--mode", choices=MODES, help="blockage model of the Monte Carlo engine")
    p.add_argument("--no-plot-script", action="store_true", help="skip writing the plot script")


def _apply_flags(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.engines is not None:
        changes["engines"] = tuple(e.strip() for e in args.engines.split(",") if e.strip())
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.mode is not None:
        changes["blockage_mode"] = args.mode
    if args.no_plot_script:
        changes["plot_script"] = False
    return spec.replace(**changes) if changes else spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwave-interference",
        description="Spatial-spectral interference and BER analysis for directional mmWave links.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec (TOML)")
    p_run.add_argument("config")
    _add_run_flags(p_run)

    p_val = sub.add_parser("validate", help="check a spec and print the resolved parameters")
    p_val.add_argument("config")

    p_pre = sub.add_parser("preset", help="run a built-in BER-vs-SNR study")
    p_pre.add_argument("name", choices=sorted(PRESETS))
    p_pre.add_argument("--write-config", metavar="PATH", help="write the preset spec and exit")
    p_pre.add_argument("--validate", action="store_true", help="validate only, do not compute")
    _add_run_flags(p_pre)
    return parser


def _summary(result) -> str:
    return f"wrote {len(result.files)} files to {result.spec.output_dir} in {result.wall_time:.1f} s"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            print(validation_report(load_spec(args.config)))
            return 0
        if args.command == "run":
            spec = _apply_flags(load_spec(args.config), args)
        else:
            spec = _apply_flags(preset(args.name), args)
            if args.write_config:
                with open(args.write_config, "w") as fh:
                    fh.write(dump_spec(spec))
                return 0
            if args.validate:
                print(validation_report(spec))
                return 0
        print(_summary(run_experiment(spec)))
        return 0
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
