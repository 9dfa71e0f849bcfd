"""Synthetic data, experiment protocols and CSV reports.

Every comparison follows the same recipe: the target expected number of
samples is ``fraction * d1 * d2``; the naive estimator sees an ``entry``-scheme
sketch and PGD a ``rowcol``-scheme sketch, each with its budget calibrated to
that target; errors are measured against the exact A_r of the full matrix.

Seeds: replication ``k`` of an experiment run with seed ``s`` uses
``derive_seed(s, k)``; the matrix and the two masks of that replication draw
from further derived streams. Results therefore do not depend on the order in
which replications are executed.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import error_metrics
from .errors import InputError
from .estimators import EstimatorConfig, naive_estimate, pgd_estimate
from .matrix_core import as_matrix, svd_deterministic, truncate_svd
from .sampling import SamplingScheme, derive_seed, sample_sketch, sketch_to_dense

SPECTRUM = (1.0, 0.9, 0.8, 0.7, 0.6)

DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_RANKS = tuple(range(2, 11))
DEFAULT_SIGMAS = (0.02, 0.05, 0.1, 0.2, 0.4)
DEFAULT_EIGENGAP_FRACTIONS = (0.1, 0.4)
DEFAULT_IMAGE_RANKS = (5, 10, 20, 30)

REPORT_FIELDS = (
    "run_id", "method", "scheme", "d1", "d2", "rank", "expected_fraction",
    "actual_count", "rel_err_fro", "rel_err_spec", "iterations",
    "final_grad_inf", "seed", "wall_ms",
)

# stream labels for derive_seed within one replication
_MATRIX, _NAIVE_MASK, _PGD_MASK = 0, 1, 2


def generate_synthetic(d, seed, sigma=0.0):
    """Symmetric rank-5 ``A* = U S U^T / ||U||_F^2`` plus optional noise ``sigma * E``.

    ``U`` is d-by-5 standard Gaussian and ``S = diag(1, .9, .8, .7, .6)``. ``E``
    has i.i.d. N(0, 1/(4d)) entries so that ``||E||`` is close to 1 at any d.
    The noise is drawn after ``U`` from the same stream, so ``sigma=0``
    reproduces the noiseless matrix exactly.
    """
    if int(d) != d or d < 5:
        raise InputError(f"dimension must be an integer >= 5, got {d}")
    if not sigma >= 0:
        raise InputError(f"noise level must be nonnegative, got {sigma}")
    d = int(d)
    rng = np.random.default_rng(derive_seed(seed, _MATRIX))
    U = rng.standard_normal((d, len(SPECTRUM)))
    A = (U * SPECTRUM) @ U.T / np.sum(U * U)
    if sigma > 0:
        A = A + sigma * rng.standard_normal((d, d)) * np.sqrt(1.0 / (4 * d))
    return A


@dataclass
class RunRecord:
    run_id: int
    method: str
    scheme: str
    d1: int
    d2: int
    rank: int
    expected_fraction: float
    actual_count: int
    rel_err_fro: float
    rel_err_spec: float
    iterations: int
    final_grad_inf: float
    seed: int
    wall_ms: float = 0.0
    # grid label (e.g. noise level) kept for summaries, not written to reports
    label: float | None = dataclasses.field(default=None, compare=False, repr=False)


def write_report(records, path):
    """Write records as CSV ordered by ``(run_id, method)``."""
    records = list(records)
    if not records:
        raise InputError("refusing to write an empty report")
    records.sort(key=lambda rec: (rec.run_id, rec.method))
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for rec in records:
            row = []
            for name in REPORT_FIELDS:
                val = getattr(rec, name)
                row.append(repr(float(val)) if isinstance(val, float) else str(val))
            writer.writerow(row)


def read_report(path):
    types = {f.name: f.type for f in dataclasses.fields(RunRecord)}
    casts = {"int": int, "float": float, "str": str}
    with open(path, encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_FIELDS:
            raise InputError(f"{path}: unexpected report header")
        return [RunRecord(**{k: casts[types[k]](v) for k, v in row.items()}) for row in reader]


def compare_methods(A, ranks, fraction, run_id, run_seed, max_iters=10, timing=False, label=None, A_svd=None):
    """Naive vs PGD estimates of ``A_r`` for each ``r`` in ``ranks`` from one pair of sketches.

    Both sampling schemes share the target expected count, and the sketches
    are reused across ranks since neither scheme depends on ``r``.
    """
    A = as_matrix(A)
    d1, d2 = A.shape
    if not 0 < fraction <= 1:
        raise InputError(f"sampling fraction must lie in (0, 1], got {fraction}")
    A_svd = svd_deterministic(A) if A_svd is None else A_svd
    naive_sk = sample_sketch(A, SamplingScheme.ENTRY, derive_seed(run_seed, _NAIVE_MASK), fraction=fraction)
    pgd_sk = sample_sketch(A, SamplingScheme.ROWCOL, derive_seed(run_seed, _PGD_MASK), fraction=fraction)
    naive_svd = svd_deterministic(sketch_to_dense(naive_sk))
    pgd_svd = svd_deterministic(sketch_to_dense(pgd_sk))

    out = []
    for k, r in enumerate(ranks):
        rid = run_id + k
        Ar = truncate_svd(A_svd, r)

        t0 = time.perf_counter()
        est = truncate_svd(naive_svd, r)
        ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        m = error_metrics(est, Ar)
        out.append(RunRecord(rid, "naive", "entry", d1, d2, r, fraction, naive_sk.entry_count,
                             m.rel_fro, m.rel_spec, 0, 0.0, run_seed, ms, label))

        t0 = time.perf_counter()
        res = pgd_estimate(pgd_sk, EstimatorConfig(rank=r, max_iters=max_iters), svd=pgd_svd)
        ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        m = error_metrics(res.estimate, Ar)
        out.append(RunRecord(rid, "pgd", "rowcol", d1, d2, r, fraction, pgd_sk.entry_count,
                             m.rel_fro, m.rel_spec, res.trace.iterations, res.trace.grad_inf[-1],
                             run_seed, ms, label))
    return out


def _check_reps(reps):
    if int(reps) != reps or reps < 1:
        raise InputError(f"replications must be a positive integer, got {reps}")
    return int(reps)


def run_lowrank(d=200, fractions=DEFAULT_FRACTIONS, reps=20, seed=0, rank=5, max_iters=10, timing=False):
    """Recovery of the noiseless rank-5 matrix as the sampling fraction grows."""
    reps = _check_reps(reps)
    records = []
    for rep in range(reps):
        rep_seed = derive_seed(seed, rep)
        A = generate_synthetic(d, rep_seed)
        A_svd = svd_deterministic(A)
        for g, frac in enumerate(fractions):
            run_seed = derive_seed(rep_seed, g + 1)
            records += compare_methods(A, [rank], frac, (g * reps + rep), run_seed,
                                       max_iters, timing, frac, A_svd)
    return records


def run_rank_sweep(d=200, ranks=DEFAULT_RANKS, fraction=0.1, sigma=0.05, reps=20, seed=0,
                   max_iters=10, timing=False):
    """Effect of the target rank on ``A* + sigma E`` at a fixed sampling fraction."""
    reps = _check_reps(reps)
    ranks = list(ranks)
    records = []
    for rep in range(reps):
        rep_seed = derive_seed(seed, rep)
        A = generate_synthetic(d, rep_seed, sigma)
        records += compare_methods(A, ranks, fraction, rep * len(ranks), derive_seed(rep_seed, 1),
                                   max_iters, timing)
    return records


def run_eigengap(d=200, sigmas=DEFAULT_SIGMAS, fractions=DEFAULT_EIGENGAP_FRACTIONS, reps=20, seed=0,
                 rank=5, max_iters=10, timing=False):
    """Effect of the noise level (a proxy for the relative eigengap) per sampling fraction."""
    reps = _check_reps(reps)
    records = []
    n_frac = len(fractions)
    for rep in range(reps):
        rep_seed = derive_seed(seed, rep)
        for a, sigma in enumerate(sigmas):
            A = generate_synthetic(d, rep_seed, sigma)
            A_svd = svd_deterministic(A)
            for b, frac in enumerate(fractions):
                g = a * n_frac + b
                run_seed = derive_seed(rep_seed, g + 1)
                records += compare_methods(A, [rank], frac, g * reps + rep, run_seed,
                                           max_iters, timing, sigma, A_svd)
    return records


def run_image(image, ranks=DEFAULT_IMAGE_RANKS, fraction=0.1, reps=20, seed=0, max_iters=10, timing=False):
    """Naive vs PGD on a fixed greyscale image, repeated over independent masks."""
    reps = _check_reps(reps)
    A = as_matrix(image, "image")
    A_svd = svd_deterministic(A)
    ranks = list(ranks)
    records = []
    for rep in range(reps):
        records += compare_methods(A, ranks, fraction, rep * len(ranks), derive_seed(seed, rep),
                                   max_iters, timing, None, A_svd)
    return records


EXPERIMENTS = {
    "lowrank": run_lowrank,
    "rank-sweep": run_rank_sweep,
    "eigengap": run_eigengap,
    "image": run_image,
}


def run_experiment(kind, seed=0, **params):
    """Dispatch to one of the experiment protocols by name."""
    try:
        fn = EXPERIMENTS[kind]
    except KeyError:
        raise InputError(f"unknown experiment {kind!r}; expected one of {sorted(EXPERIMENTS)}") from None
    return fn(seed=seed, **params)


def summarize(records, by=("method", "rank", "expected_fraction", "label")):
    """Mean and standard deviation of the relative errors grouped by ``by``."""
    groups = {}
    for rec in records:
        key = tuple(getattr(rec, k) for k in by)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups, key=lambda k: tuple((v is None, v) for v in k)):
        errs = np.array([r.rel_err_fro for r in groups[key]])
        specs = np.array([r.rel_err_spec for r in groups[key]])
        rows.append(dict(zip(by, key), n=len(errs), mean_fro=float(errs.mean()),
                         sd_fro=float(errs.std(ddof=1)) if len(errs) > 1 else 0.0,
                         mean_spec=float(specs.mean())))
    return rows
