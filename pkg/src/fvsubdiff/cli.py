"""Command-line entry point: ``fvsubdiff {solve,table1,table2,verify}``.

Exit codes: 0 success, 1 error, 2 reference-threshold violation under ``--check``.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import reference_values as ref
from .checks import run_checks
from .errors import FvSubdiffError
from .experiments import ExperimentConfig, emit_reports, markdown_table, run_experiment

log = logging.getLogger("fvsubdiff")

EXIT_OK, EXIT_ERROR, EXIT_THRESHOLD = 0, 1, 2

TABLE1_DEFAULTS = dict(mode="spatial", M=[10, 20, 40, 80], ratio=0.5, fine_factor=2)
TABLE2_DEFAULTS = dict(mode="temporal", alpha=0.6, M=[128], N=[10, 20, 40], fine_factor=1)
TABLE1_ALPHAS = (0.4, 0.75)
TABLE2_GAMMAS = (1.0, 2.0, 3.4)


def _ladder(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for threshold violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="fvsubdiff", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every run")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
    common.add_argument("--alpha", type=_floats, help="fractional order(s), comma-separated")
    common.add_argument("--gamma", type=_floats, help="time-mesh grading parameter(s)")
    common.add_argument("--M", type=_ladder, help="spatial ladder, e.g. 10,20,40")
    common.add_argument("--N", type=_ladder, help="time-step ladder, e.g. 10,20,40")
    common.add_argument("--m", type=int, help="time subsamples per interval in the error norm")
    common.add_argument("--ratio", type=float, help="coupling ratio k^(1+alpha)/h^2 in spatial mode")
    common.add_argument("--T", type=float, help="final time")
    common.add_argument("--tol", type=float, help="relative residual tolerance of each step solve")
    common.add_argument("--fine-factor", type=int, dest="fine_factor", help="error nodes from the mesh fine_factor*max(M)")
    common.add_argument("--out-dir", dest="out_dir", help="write csv/md/plotdat/json reports here")
    common.add_argument("--deterministic", action="store_true", default=None, help="single-threaded BLAS")

    sub.add_parser("solve", parents=[common], help="one run at (max M, max N)")
    for name, what in (("table1", "spatial refinement sweep"), ("table2", "temporal refinement sweep")):
        p = sub.add_parser(name, parents=[common], help=what)
        p.add_argument("--check", action="store_true", help="compare with the reference table; exit 2 on violation")
    sub.add_parser("verify", help="fast property suite")
    return parser


def _load_config_file(path):
    p = Path(path)
    if not p.exists():
        raise FvSubdiffError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FvSubdiffError(f"config {path} is not valid JSON: {exc}") from exc


def _configs(args, defaults, sweep_key, sweep_default):
    """One config per value of the swept parameter (alpha for table1, gamma for table2).

    Precedence: flags, then the config file, then the subcommand defaults.
    """
    base = dict(defaults)
    from_file = _load_config_file(args.config) if args.config else {}
    base.update(from_file)
    for key in ("M", "N", "m", "ratio", "T", "tol", "fine_factor", "out_dir", "deterministic"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    other = "gamma" if sweep_key == "alpha" else "alpha"
    if getattr(args, other):
        base[other] = getattr(args, other)[0]
    if getattr(args, sweep_key):
        swept = getattr(args, sweep_key)
    elif sweep_key in from_file:
        swept = [from_file[sweep_key]]
    else:
        swept = list(sweep_default)
    return [ExperimentConfig.from_dict({**base, sweep_key: v}) for v in swept]


def _check_report(report, table, key):
    """Compare with reference (error, rate) pairs; returns violation messages."""
    if key not in table:
        return [f"no reference column for {key}"]
    column = table[key]
    if report.kind == "spatial":
        factor, rate_tol = ref.SPATIAL_ERROR_FACTOR, ref.SPATIAL_RATE_TOL
    else:
        factor, rate_tol = ref.TEMPORAL_ERROR_FACTOR, ref.TEMPORAL_RATE_TOL
    problems = []
    attr = report.refined
    for lv in report.levels:
        level = getattr(lv, attr)
        if level not in column:
            continue
        err_ref, rate_ref = column[level]
        if not err_ref / factor <= lv.error <= err_ref * factor:
            problems.append(f"{attr}={level}: error {lv.error:.4e} vs {err_ref:.4e} (factor {factor})")
        if rate_ref is not None and lv.rate is not None and abs(lv.rate - rate_ref) > rate_tol:
            problems.append(f"{attr}={level}: rate {lv.rate:.4f} vs {rate_ref:.4f} (tol {rate_tol})")
    return problems


def _run_table(args, defaults, sweep_key, sweep_default, table, stem):
    violations = []
    for config in _configs(args, defaults, sweep_key, sweep_default):
        report = run_experiment(config)
        print(markdown_table(report))
        value = getattr(config, sweep_key) if sweep_key == "alpha" else config.grading
        if config.out_dir:
            for path in emit_reports(report, config.out_dir, f"{stem}_{sweep_key}{value:g}").values():
                log.info("wrote %s", path)
        if getattr(args, "check", False):
            if sweep_key == "gamma" and config.alpha != ref.TEMPORAL_ALPHA:
                violations.append(f"reference temporal data exists only for alpha={ref.TEMPORAL_ALPHA}")
            else:
                violations += _check_report(report, table, value)
    for msg in violations:
        print(f"THRESHOLD VIOLATION: {msg}", file=sys.stderr)
    return EXIT_THRESHOLD if violations else EXIT_OK


def cmd_solve(args):
    configs = _configs(args, {"mode": "single"}, "alpha", (0.5,))
    for config in configs:
        report = run_experiment(config)
        lv = report.levels[0]
        print(f"alpha={config.alpha:g} gamma={lv.gamma:g} M={lv.M} N={lv.N} error={lv.error:.6e} time={lv.wall_time:.2f}s")
        if config.out_dir:
            emit_reports(report, config.out_dir, f"solve_alpha{config.alpha:g}_M{lv.M}_N{lv.N}")
    return EXIT_OK


def cmd_verify(args):
    results = run_checks()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "table1":
            return _run_table(args, TABLE1_DEFAULTS, "alpha", TABLE1_ALPHAS, ref.SPATIAL, "table1")
        if args.command == "table2":
            return _run_table(args, TABLE2_DEFAULTS, "gamma", TABLE2_GAMMAS, ref.TEMPORAL, "table2")
        return cmd_verify(args)
    except FvSubdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
