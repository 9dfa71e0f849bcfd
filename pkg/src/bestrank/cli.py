"""Command-line interface.

Exit codes: 0 on success, 2 for input or format errors, 3 when the
optimizer diverges.
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .diagnostics import structure_coefficients
from .errors import DivergenceError, InputError
from .estimators import EstimatorConfig, naive_estimate, pgd_estimate
from .fileio import read_matrix_csv, read_pgm, read_sketch, write_matrix_csv, write_sketch
from .sampling import sample_sketch

EXIT_INPUT = 2
EXIT_DIVERGED = 3


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _beta(text):
    if text == "auto":
        return text
    return float(text)


def cmd_gen(args):
    sigma = args.sigma if args.kind == "noisy" else 0.0
    A = bench.generate_synthetic(args.d, args.seed, sigma)
    write_matrix_csv(A, args.out)


def cmd_sample(args):
    A = read_matrix_csv(args.input)
    s = sample_sketch(A, args.scheme, args.seed, n=args.budget, fraction=args.frac)
    write_sketch(s, args.out)
    print(f"sampled {s.entry_count} of {A.size} entries (budget n={s.budget_n!r})")


def cmd_estimate(args):
    s = read_sketch(args.sketch)
    if args.method == "naive":
        est = naive_estimate(s, args.rank)
    else:
        cfg = EstimatorConfig(rank=args.rank, beta=args.beta, max_iters=args.max_iter, grad_tol=args.tol)
        res = pgd_estimate(s, cfg)
        est = res.estimate
        print(f"pgd: {res.trace.iterations} iterations, stop={res.trace.reason}, "
              f"objective={res.trace.objective[-1]!r}, grad_inf={res.trace.grad_inf[-1]!r}")
    write_matrix_csv(est, args.out)


def cmd_diag(args):
    A = read_matrix_csv(args.input)
    for line in structure_coefficients(A, args.rank).lines():
        print(line)


def cmd_bench(args):
    common = dict(reps=args.reps, seed=args.seed, max_iters=args.max_iter, timing=args.timing)
    if args.experiment == "lowrank":
        records = bench.run_lowrank(d=args.d, fractions=args.fracs or bench.DEFAULT_FRACTIONS,
                                    rank=args.rank or 5, **common)
    elif args.experiment == "rank-sweep":
        records = bench.run_rank_sweep(d=args.d, ranks=args.ranks or bench.DEFAULT_RANKS,
                                       fraction=args.frac, sigma=args.sigma, **common)
    elif args.experiment == "eigengap":
        records = bench.run_eigengap(d=args.d, sigmas=args.sigmas or bench.DEFAULT_SIGMAS,
                                     fractions=args.fracs or bench.DEFAULT_EIGENGAP_FRACTIONS,
                                     rank=args.rank or 5, **common)
    else:
        if not args.image:
            raise InputError("bench image requires --image <file.pgm>")
        records = bench.run_image(read_pgm(args.image), ranks=args.ranks or bench.DEFAULT_IMAGE_RANKS,
                                  fraction=args.frac, **common)
    bench.write_report(records, args.out)
    for row in bench.summarize(records):
        fields = " ".join(f"{k}={v}" for k, v in row.items() if v is not None)
        print(fields)


def build_parser():
    parser = argparse.ArgumentParser(prog="bestrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic matrix")
    p.add_argument("--kind", choices=["lowrank", "noisy"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", help="sample a sketch of a CSV matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--scheme", choices=["entry", "rowcol"], required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--frac", type=float)
    g.add_argument("--budget", type=float)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate A_r from a sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--method", choices=["naive", "pgd"], required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--beta", type=_beta, default="auto")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("diag", help="print structural coefficients of a CSV matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("bench", help="run a benchmark experiment and write a CSV report")
    p.add_argument("experiment", choices=sorted(bench.EXPERIMENTS))
    p.add_argument("--d", type=int, default=200)
    p.add_argument("--rank", type=int, help="target rank (lowrank, eigengap; default 5)")
    p.add_argument("--ranks", type=_ints, help="comma-separated ranks (rank-sweep, image)")
    p.add_argument("--frac", type=float, default=0.1, help="sampling fraction (rank-sweep, image)")
    p.add_argument("--fracs", type=_floats, help="comma-separated fractions (lowrank, eigengap)")
    p.add_argument("--sigma", type=float, default=0.05, help="noise level (rank-sweep)")
    p.add_argument("--sigmas", type=_floats, help="comma-separated noise levels (eigengap)")
    p.add_argument("--image", help="greyscale PGM file (image)")
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--timing", action="store_true", help="record wall-clock times (breaks byte-determinism)")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
