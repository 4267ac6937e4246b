"""Command-line interface.

Exit codes: 0 success, 1 numerical failure (in a sweep: some trial failed),
2 usage or I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .clustering import Representation, kmeans
from .correspondence import (
    corr_epsilon,
    corr_weighted_variance,
    correspondence,
    estimate_delta,
    one_multiplicity,
)
from .exceptions import TwoWayError
from .experiment import ConfigError, ExperimentConfig, ReportError, render_report, run_experiment
from .model import NoiseSpec, planted_instance
from .reconstruct import reconstruct
from .spectra import DEFAULT_GAP_THRESHOLD, detect_gap, thin_svd

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args):
    P, bs = io.read_pattern(args.pattern)
    if args.rows or args.cols:
        bs = bs.rescaled(args.rows or bs.m, args.cols or bs.n)
    if args.noise == "none":
        noise = None
    else:
        noise = NoiseSpec(kind=args.noise, bound=args.bound, variance=args.variance, seed=args.seed)
    A, B, W = planted_instance(P, bs, noise)
    out = _out_dir(args)
    io.write_matrix(out / "A.txt", A)
    io.write_matrix(out / "B.txt", B)
    io.write_matrix(out / "W.txt", W)
    io.write_partition(out / "row_labels.csv", bs.row_labels())
    io.write_partition(out / "col_labels.csv", bs.col_labels())
    io.write_pattern(out / "pattern.json", P, bs)
    return EXIT_OK


def cmd_svd(args):
    M = io.read_matrix(args.matrix)
    svd = thin_svd(M, args.k)
    if args.out is None:
        for s in svd.singular_values:
            print(format(s, ".17g"))
        return EXIT_OK
    out = _out_dir(args)
    io.write_vector(out / "singular_values.txt", svd.singular_values)
    io.write_matrix(out / "left_vectors.txt", svd.left_vectors)
    io.write_matrix(out / "right_vectors.txt", svd.right_vectors)
    return EXIT_OK


def cmd_gap(args):
    values = io.read_vector(args.values)
    gap = detect_gap(values, args.rows, args.cols, args.gap_threshold)
    print(json.dumps({"k": gap.k, "threshold": gap.threshold, "gap_ratio": gap.gap_ratio}))
    return EXIT_OK


def cmd_cluster(args):
    points = io.read_matrix(args.points)
    weights = io.read_vector(args.weights) if args.weights else np.ones(points.shape[0])
    result = kmeans(Representation(points, weights), args.k, args.seed, args.restarts)
    report = {"within_variance": result.within_variance, "n_iter": result.n_iter,
              "degenerate": result.degenerate, "centers": result.centers.tolist()}
    if args.out is None:
        print(json.dumps(report))
        return EXIT_OK
    out = _out_dir(args)
    io.write_partition(out / "partition.csv", result.labels)
    io.write_json(out / "report.json", report)
    return EXIT_OK


def cmd_correspond(args):
    M = io.read_matrix(args.matrix)
    dec = correspondence(M, args.k)
    out = _out_dir(args)
    io.write_matrix(out / "normalized.txt", dec.normalized)
    io.write_vector(out / "singular_values.txt", dec.svd.singular_values)
    io.write_coordinates(out / "row_coordinates.csv", dec.corr_left[:, 1:], dec.row_sums)
    io.write_coordinates(out / "col_coordinates.csv", dec.corr_right[:, 1:], dec.col_sums)
    values = dec.svd.singular_values
    eps = corr_epsilon(*M.shape, args.tau)
    above = int(np.count_nonzero(values > eps))
    report = {"singular_values": values.tolist(),
              "one_multiplicity": one_multiplicity(values),
              "epsilon": eps,
              "k_above_epsilon": above,
              "delta_estimate": estimate_delta(values, above, eps) if above else None}
    if args.a:
        rows = corr_weighted_variance(dec.corr_left[:, 1:], dec.row_sums, args.a,
                                      args.seed, args.restarts)
        io.write_partition(out / "row_partition.csv", rows.labels)
        report["row_weighted_variance"] = rows.within_variance
    if args.b:
        cols = corr_weighted_variance(dec.corr_right[:, 1:], dec.col_sums, args.b,
                                      args.seed, args.restarts)
        io.write_partition(out / "col_partition.csv", cols.labels)
        report["col_weighted_variance"] = cols.within_variance
    io.write_json(out / "report.json", report)
    return EXIT_OK


def cmd_reconstruct(args):
    A = io.read_matrix(args.matrix)
    k = args.k
    if k is None:
        svd = thin_svd(A)
        k = detect_gap(svd.singular_values, *A.shape, args.gap_threshold).k
    result = reconstruct(A, k, args.a, args.b, args.seed, args.restarts)
    out = _out_dir(args)
    io.write_matrix(out / "B_hat.txt", result.B_hat)
    io.write_partition(out / "row_partition.csv", result.row_partition)
    io.write_partition(out / "col_partition.csv", result.col_partition)
    report = result.report()
    report["k"] = k
    io.write_json(out / "report.json", report)
    return EXIT_OK


def cmd_experiment(args):
    config = ExperimentConfig.from_file(
        args.config, out=args.out, seed=args.seed, tau=args.tau,
        gap_threshold=args.gap_threshold, restarts=args.restarts, workers=args.workers,
    )
    outcome = run_experiment(config)
    print(json.dumps({"out": str(outcome.out_dir), "n_trials": outcome.summary["n_trials"],
                      "n_failed": outcome.summary["n_failed"]}))
    return outcome.exit_code


def cmd_report(args):
    for path in render_report(args.summary, args.out):
        print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="twoway", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, restarts=False):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if restarts:
            p.add_argument("--restarts", type=int, default=10)

    p = sub.add_parser("generate", help="pattern + structure -> A, B, W matrix files")
    p.add_argument("pattern", help="pattern JSON file")
    p.add_argument("--rows", type=int, help="rescale block sizes to this many rows")
    p.add_argument("--cols", type=int, help="rescale block sizes to this many columns")
    p.add_argument("--noise", choices=["uniform", "bernoulli", "gaussian", "none"],
                   default="uniform")
    p.add_argument("--bound", type=float, default=1.0, help="K for uniform noise")
    p.add_argument("--variance", type=float, default=1.0, help="variance for gaussian noise")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("svd", help="matrix -> singular triplets")
    p.add_argument("matrix")
    p.add_argument("-k", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("gap", help="singular values -> number of protruding values")
    p.add_argument("values", help="file of descending singular values")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--gap-threshold", type=float, default=DEFAULT_GAP_THRESHOLD)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("cluster", help="representatives -> partition")
    p.add_argument("points", help="matrix file, one point per row")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--weights", help="file of positive weights, one per point")
    p.add_argument("--out")
    common(p, restarts=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("correspond", help="nonnegative matrix -> correspondence outputs")
    p.add_argument("matrix")
    p.add_argument("-k", type=int, required=True, help="triplets kept, trivial one included")
    p.add_argument("-a", type=int, help="also cluster rows into this many groups")
    p.add_argument("-b", type=int, help="also cluster columns into this many groups")
    p.add_argument("--tau", type=float, default=0.4)
    p.add_argument("--out", required=True)
    common(p, restarts=True)
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("reconstruct", help="matrix + k, a, b -> blown-up approximation")
    p.add_argument("matrix")
    p.add_argument("-k", type=int, help="protruding values (default: detected)")
    p.add_argument("-a", type=int, required=True)
    p.add_argument("-b", type=int, required=True)
    p.add_argument("--gap-threshold", type=float, default=DEFAULT_GAP_THRESHOLD)
    p.add_argument("--out", required=True)
    common(p, restarts=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("experiment", help="config -> seeded sweep and report")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--gap-threshold", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summary.json -> plot table and gnuplot script")
    p.add_argument("summary")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReportError, OSError) as exc:
        print(f"twoway {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        print(f"twoway {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TwoWayError as exc:
        print(f"twoway {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
