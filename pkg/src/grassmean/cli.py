"""Command-line interface.

Three subcommands: ``karcher-mean`` averages the subspaces in a JSON file,
``distance`` reports the geodesic distance between exactly two stored
subspaces, and ``bi-experiment`` runs the blind-identification benchmark
sweep. Exit codes: 0 success, 1 usage or input errors, 2 the solver stopped
without reaching the gradient tolerance, 3 a cut-locus failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .blindid import MixingExperiment, run_experiment
from .exceptions import CutLocusError, GrassmeanError, InvalidInputError
from .files import (
    SubspaceFileError,
    read_subspace_file,
    write_results_csv,
    write_subspace_file,
    write_trace_csv,
)
from .grassmann import basis_from_projector, dist, principal_angles, projector_from_basis
from .karcher import CGConfig, DIRECTION_RULES, KarcherProblem, karcher_mean

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_CUT_LOCUS = 3

_STEP_RULES = {"backtrack": "backtracking", "newton": "newton_cp"}


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad usage; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grassmean",
                     description="Average subspaces of C^n and benchmark the result.")
    parser.add_argument("--version", action="version", version=f"grassmean {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    mean = sub.add_parser("karcher-mean", help="Karcher mean of the stored subspaces")
    mean.add_argument("input", help="subspace JSON file")
    mean.add_argument("--out", required=True, help="output subspace JSON file (one basis)")
    mean.add_argument("--trace", help="iteration trace CSV (default: <out>.trace.csv)")
    mean.add_argument("--rule", choices=DIRECTION_RULES, default="hs",
                      help="conjugate-direction update rule")
    mean.add_argument("--step", choices=sorted(_STEP_RULES), default="backtrack",
                      help="step-size rule (newton applies to one-dimensional subspaces)")
    mean.add_argument("--grad-tol", type=float, default=1e-8,
                      help="gradient-norm stopping tolerance")
    mean.add_argument("--max-iter", type=int, default=500, help="iteration cap")
    mean.add_argument("--step-init", type=float, default=1.0,
                      help="initial trial step for line searches")
    mean.add_argument("--repair", action="store_true",
                      help="re-orthonormalize bases that fail the file check")

    distance = sub.add_parser("distance",
                              help="geodesic distance between two stored subspaces")
    distance.add_argument("input", help="subspace JSON file holding exactly two bases")
    distance.add_argument("--repair", action="store_true",
                          help="re-orthonormalize bases that fail the file check")

    experiment = sub.add_parser("bi-experiment",
                                help="blind-identification benchmark sweep")
    experiment.add_argument("--n", type=int, default=5, help="number of sources")
    experiment.add_argument("--eps-list", default="1,0.5,0.2,0.1,0.01",
                            help="comma-separated mixing perturbation levels")
    experiment.add_argument("--nest-list", default="10",
                            help="comma-separated estimation counts per trial")
    experiment.add_argument("--trials", type=int, default=100, help="trials per sweep value")
    experiment.add_argument("--samples", type=int, default=10000,
                            help="observations per estimation")
    experiment.add_argument("--seed", type=int, default=0, help="base RNG seed")
    experiment.add_argument("--out", required=True, help="results CSV path")
    return parser


def _default_trace_path(out_path: str) -> str:
    return os.path.splitext(out_path)[0] + ".trace.csv"


def _load_points(path: str, repair: bool):
    bases = read_subspace_file(path, repair=repair)
    return bases, [projector_from_basis(b) for b in bases]


def _run_karcher_mean(args) -> int:
    trace_path = args.trace if args.trace else _default_trace_path(args.out)
    _, points = _load_points(args.input, args.repair)
    problem = KarcherProblem(tuple(points))
    config = CGConfig(direction_rule=args.rule, step_rule=_STEP_RULES[args.step],
                      step_init=args.step_init, grad_tol=args.grad_tol,
                      max_iter=args.max_iter)
    try:
        point, trace = karcher_mean(problem, config=config)
    except CutLocusError as err:
        if err.trace is not None:
            write_trace_csv(trace_path, err.trace)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CUT_LOCUS
    except GrassmeanError as err:
        trace = getattr(err, "trace", None)
        if trace is not None:
            write_trace_csv(trace_path, trace)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED if trace is not None else EXIT_USAGE
    write_trace_csv(trace_path, trace)
    write_subspace_file(args.out, [basis_from_projector(point)])
    last = trace.iterates[-1]
    print(f"status = {trace.status}")
    print(f"iterations = {last.iteration}")
    print(f"cost = {last.cost:.12g}")
    print(f"grad_norm = {last.grad_norm:.12g}")
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def _run_distance(args) -> int:
    _, points = _load_points(args.input, args.repair)
    if len(points) != 2:
        print(f"error: distance needs exactly 2 bases, file has {len(points)}",
              file=sys.stderr)
        return EXIT_USAGE
    value = dist(points[0], points[1])
    angles = principal_angles(points[0], points[1])
    print(f"distance = {value:.12g}")
    print("principal_angles_rad = " + " ".join(f"{a:.12g}" for a in angles))
    return EXIT_OK


def _parse_float_list(text: str, name: str):
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidInputError(f"{name} must be a comma-separated list of numbers")
    if not values:
        raise InvalidInputError(f"{name} must not be empty")
    return values


def _run_experiment_cmd(args) -> int:
    eps_values = _parse_float_list(args.eps_list, "--eps-list")
    nest_values = _parse_float_list(args.nest_list, "--nest-list")
    if len(eps_values) > 1 and len(nest_values) > 1:
        print("error: only one of --eps-list and --nest-list may vary", file=sys.stderr)
        return EXIT_USAGE
    for value in nest_values:
        if value != int(value) or value < 1:
            print("error: --nest-list entries must be positive integers", file=sys.stderr)
            return EXIT_USAGE
    if len(nest_values) > 1:
        sweep_param = "n_estimations"
        sweep_values = [int(v) for v in nest_values]
        fixed_eps = eps_values[0]
        cfg = MixingExperiment(n=args.n, n_estimations=sweep_values[0],
                               noise_level=fixed_eps, trials=args.trials,
                               samples_per_trial=args.samples, rng_seed=args.seed)
    else:
        sweep_param = "noise_level"
        sweep_values = eps_values
        cfg = MixingExperiment(n=args.n, n_estimations=int(nest_values[0]),
                               noise_level=sweep_values[0], trials=args.trials,
                               samples_per_trial=args.samples, rng_seed=args.seed)
    rows = run_experiment(cfg, sweep_param, sweep_values)
    write_results_csv(args.out, rows)
    failed = sum(1 for row in rows if row.status != "ok")
    print(f"rows = {len(rows)}")
    print(f"failed = {failed}")
    print(f"out = {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        if args.command == "karcher-mean":
            return _run_karcher_mean(args)
        if args.command == "distance":
            return _run_distance(args)
        return _run_experiment_cmd(args)
    except (SubspaceFileError, InvalidInputError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except CutLocusError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CUT_LOCUS


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
