"""Command-line entry point: ``run`` experiments and ``diagnose`` checks.

Exit codes: 0 success, 1 configuration error, 2 diagnostic failure.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import __version__
from .diagnostics import diagnostic_elliptical, diagnostic_tail_bound, scaling_report
from .harness import (
    SUMMARY_HEADER,
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    run_experiment,
    summary_rows,
)
from .policies import KINDS

EXIT_OK, EXIT_CONFIG, EXIT_DIAGNOSTIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), keeping 2 for failed diagnostics."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vclbandit", description="Linear bandit simulations with varying-confidence UCB.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded replications and write CSV logs")
    run.add_argument("--config", help="INI experiment file")
    run.add_argument("--out", help="output directory for CSV files")
    run.add_argument("--replications", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--policy", choices=KINDS)
    run.add_argument("--horizon", type=int)
    run.add_argument("--dim", type=int)
    run.add_argument("--env", help="unit_ball | finite:<k> | clipped_ball:<m>")
    run.add_argument("--noise", choices=("gaussian", "rademacher", "uniform"))
    run.add_argument("--constant-c", type=float, dest="constant_c")
    run.add_argument("--workers", type=int)

    diag = sub.add_parser("diagnose", help="run an empirical check")
    diag.add_argument("which", choices=("elliptical", "tail", "scaling"))
    diag.add_argument("--config", help="INI file; only [diagnostics] and seed/workers are read")
    return p


def _run(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = apply_overrides(
        cfg,
        dim=args.dim,
        horizon=args.horizon,
        replications=args.replications,
        seed=args.seed,
        env=args.env,
        noise=args.noise,
        policy=args.policy,
        constant_c=args.constant_c,
        workers=args.workers,
    )
    try:
        result = run_experiment(cfg, out_dir=args.out)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}") from exc
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    w.writerows(summary_rows(result))
    if result.nonconverged_rounds:
        print(f"warning: {result.nonconverged_rounds} rounds hit the optimizer iteration cap", file=sys.stderr)
    return EXIT_OK


def _diag_value(diag, key, kind):
    try:
        return kind(diag[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {diag[key]!r}") from exc


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _diagnose(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    dg = cfg.diagnostics
    if args.which == "elliptical":
        report = diagnostic_elliptical(
            _diag_value(dg, "elliptical_trials", int),
            _diag_value(dg, "elliptical_horizon", int),
            _diag_value(dg, "elliptical_dim", int),
            cfg.seed,
        )
    elif args.which == "tail":
        report = diagnostic_tail_bound(
            _diag_value(dg, "tail_delta", float),
            _diag_value(dg, "tail_reps", int),
            _diag_value(dg, "tail_t", int),
            _diag_value(dg, "tail_dim", int),
            cfg.seed,
            noise=cfg.noise,
            threshold=_diag_value(dg, "tail_threshold", float),
            workers=cfg.workers,
        )
    else:
        report = scaling_report(
            _diag_value(dg, "scaling_dims", _ints),
            _diag_value(dg, "scaling_horizons", _ints),
            _diag_value(dg, "scaling_replications", int),
            cfg.seed,
            constant=cfg.policies[0].constant_c,
            threshold=_diag_value(dg, "scaling_threshold", float),
            control_threshold=_diag_value(dg, "scaling_control_threshold", float),
            workers=cfg.workers,
        )
    for line in report.lines():
        print(line)
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_DIAGNOSTIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args) if args.command == "run" else _diagnose(args)
    except ValueError as exc:
        # ConfigError plus invalid numeric parameters rejected by the diagnostics.
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
