"""Command-line entry point.

Subcommands run one scenario each (``simulate``, ``decompose``, ``rates``,
``sa``, ``autocov``, ``appell``) or render report tables and figures from a
finished results directory (``report``).  Exit codes: 0 success, 1 run
failure, 2 usage error, 3 validation failure.  The MSLLN_OUT environment
variable overrides ``--out``.
"""

import argparse
import os
import sys

from .config import ConfigError, SCENARIOS, default_config, load


def _add_common(parser):
    parser.add_argument("--config", help="TOML experiment config")
    parser.add_argument("--seed", type=int, help="base seed override (u64)")
    parser.add_argument("--reps", type=int, help="replication count override")
    parser.add_argument("--levels", type=int, help="max dyadic level override")
    parser.add_argument("--out", help="output directory (MSLLN_OUT overrides)")
    parser.add_argument("--jobs", type=int, help="worker processes (output-invariant)")
    parser.add_argument("--format", choices=("csv", "json"), help="report body format")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mslln",
        description="Monte Carlo laboratory for strong-law convergence rates "
        "of heavy-tailed, long-memory linear processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for scenario in SCENARIOS:
        sp = sub.add_parser(scenario, help=f"run the {scenario} scenario")
        _add_common(sp)
    rp = sub.add_parser("report", help="render tables and figures from results")
    rp.add_argument("--out", help="results directory (MSLLN_OUT overrides)")
    return parser


def _resolve_out(args, config_out, default):
    return os.environ.get("MSLLN_OUT") or args.out or config_out or default


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "report":
        from .reporting import ReportError, render_report

        results_dir = _resolve_out(args, None, None)
        if not results_dir:
            print("report: no results directory (use --out or MSLLN_OUT)", file=sys.stderr)
            return 3
        try:
            written = render_report(results_dir)
        except ReportError as exc:
            print(f"report: {exc}", file=sys.stderr)
            return 3
        for path in written:
            print(path)
        return 0

    try:
        config = load(args.config) if args.config else default_config(args.command)
        if config.scenario != args.command:
            raise ConfigError(
                f"config scenario {config.scenario!r} does not match subcommand {args.command!r}"
            )
        if args.seed is not None:
            config.base_seed = args.seed
        if args.reps is not None:
            config.replications = args.reps
        if args.levels is not None:
            config.levels = args.levels
        if args.jobs is not None:
            config.jobs = args.jobs
        if args.format is not None:
            config.format = args.format
        config.validate()
    except (ConfigError, OSError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3

    out_dir = _resolve_out(args, config.out, f"mslln-{args.command}")
    from .runner import run_experiment

    try:
        manifest = run_experiment(config, out_dir)
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if manifest["failures"]:
        for failure in manifest["failures"]:
            print(f"grid point {failure['grid_index']} failed: {failure['error']}",
                  file=sys.stderr)
        return 1
    print(os.path.join(out_dir, "manifest.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
