"""Structural coefficients of a matrix, error metrics and bound evaluators.

The bound evaluators reproduce the *shape* of the theoretical error bounds:
every unspecified universal constant is set to 1, so values are only
meaningful relative to one another, never as calibrated guarantees.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DegeneracyError, InputError
from .matrix_core import as_matrix, check_rank, svd_deterministic

CONSTANTS_NOTE = "universal constants set to 1; shape-only"

THEOREM1 = "Theorem1"
LEMMA2_EQ9 = "Lemma2Eq9"
LEMMA2_EQ10 = "Lemma2Eq10"
THEOREM2_FLOOR = "Theorem2Floor"
THEOREM2_CONTRACTION = "Theorem2Contraction"
BOUND_IDS = (THEOREM1, LEMMA2_EQ9, LEMMA2_EQ10, THEOREM2_FLOOR, THEOREM2_CONTRACTION)


class StructureReport(NamedTuple):
    r: int
    mu_r: float
    nu_r: float
    nu_r_inf: float
    sigma_r: float
    sigma_r_plus_1: float
    eigengap: float
    kappa_r: float
    kappa: float

    def lines(self):
        """``key=value`` lines in the fixed order used by the ``diag`` command."""
        keys = ("mu_r", "nu_r", "nu_r_inf", "eigengap", "kappa_r", "kappa")
        return [f"{k}={getattr(self, k)!r}" for k in keys]


class ErrorMetrics(NamedTuple):
    rel_fro: float
    rel_spec: float
    abs_fro: float


class BoundReport(NamedTuple):
    bound_id: str
    value: float
    required_n: float | None = None
    constants_note: str = CONSTANTS_NOTE


def _ratio(num, den):
    """Elementwise ``num / den`` keeping only entries where ``den > 0``."""
    keep = den > 0
    return num[keep] / den[keep]


def structure_coefficients(A, r, svd=None):
    """Coefficients mu_r, nu_r, nu_r_inf and the spectral quantities around rank ``r``.

    Rows and columns of ``A`` that are identically zero are skipped: their
    ratios are 0/0. nu_r is evaluated as the largest fraction of squared row
    (or column) norm left in ``A - A_r``, which equals ``1 - min ratio^2`` by
    orthogonality but does not lose precision when the ratio is close to 1.
    nu_r_inf follows its displayed definition verbatim, mixed normalization
    included.
    """
    A = as_matrix(A)
    r = check_rank(r, A.shape)
    svd = svd_deterministic(A) if svd is None else svd
    Ar = svd.reconstruct(r)
    N = A - Ar
    rows_A, cols_A = np.linalg.norm(A, axis=1), np.linalg.norm(A, axis=0)
    if not rows_A.any():
        raise InputError("structure coefficients are undefined for an all-zero matrix")
    rows_Ar, cols_Ar = np.linalg.norm(Ar, axis=1), np.linalg.norm(Ar, axis=0)
    rows_N, cols_N = np.linalg.norm(N, axis=1), np.linalg.norm(N, axis=0)

    mu = max(_ratio(rows_Ar, rows_A).max(), _ratio(cols_Ar, cols_A).max())
    nu2 = max(_ratio(rows_N**2, rows_A**2).max(), _ratio(cols_N**2, cols_A**2).max())

    fro = np.linalg.norm(A)
    den = np.abs(A) + (rows_A[:, None] ** 2 + cols_A[None, :] ** 2) / fro
    nu_inf = _ratio(np.abs(N), den).max(initial=0.0)

    sigma = svd.sigma
    s1, sr = sigma[0], sigma[r - 1]
    sr1 = sigma[r] if r < len(sigma) else 0.0
    return StructureReport(
        r=r,
        mu_r=float(min(mu, 1.0)),
        nu_r=float(math.sqrt(min(nu2, 1.0))),
        nu_r_inf=float(nu_inf),
        sigma_r=float(sr),
        sigma_r_plus_1=float(sr1),
        eigengap=float(sr - sr1),
        kappa_r=float(sr1 / sr) if sr > 0 else float("inf"),
        kappa=float(s1 / sr) if sr > 0 else float("inf"),
    )


def error_metrics(est, ref):
    """Relative Frobenius and spectral errors of ``est`` against a nonzero ``ref``."""
    est, ref = as_matrix(est, "estimate"), as_matrix(ref, "reference")
    if est.shape != ref.shape:
        raise InputError(f"shape mismatch: {est.shape} vs {ref.shape}")
    ref_fro = np.linalg.norm(ref)
    if ref_fro == 0:
        raise InputError("relative error against a zero reference is undefined")
    diff = est - ref
    abs_fro = float(np.linalg.norm(diff))
    return ErrorMetrics(
        rel_fro=abs_fro / ref_fro,
        rel_spec=float(np.linalg.norm(diff, 2) / np.linalg.norm(ref, 2)),
        abs_fro=abs_fro,
    )


def _need(extras, key, bound_id):
    if key not in extras:
        raise InputError(f"{bound_id} needs extra parameter {key!r}")
    return float(extras[key])


def evaluate_bound(bound_id, A, r, n, **extras):
    """Right-hand side of a theoretical bound with constants set to 1.

    Extras: ``eta`` and ``t`` (and optionally ``delta0``) for
    ``Theorem2Contraction``; ``deviation`` (a measured
    ``||P_Omega(N_r) - N_r||``) for ``Theorem2Floor``; ``alpha`` (default 1)
    for the informational sample-size thresholds, which are never enforced.
    """
    if bound_id not in BOUND_IDS:
        raise InputError(f"unknown bound {bound_id!r}; expected one of {BOUND_IDS}")
    A = as_matrix(A)
    r = check_rank(r, A.shape)
    if not n > 0:
        raise InputError(f"budget n must be positive, got {n}")
    svd = svd_deterministic(A)
    sigma = svd.sigma
    s1, sr = float(sigma[0]), float(sigma[r - 1])
    sr1 = float(sigma[r]) if r < len(sigma) else 0.0
    gap = sr - sr1
    if not gap > 0:
        raise DegeneracyError(f"sigma_{r} == sigma_{r + 1}; the bound is undefined")
    d = max(A.shape)
    fro = float(np.linalg.norm(A))
    alpha = float(extras.get("alpha", 1.0))
    log_d = math.log(d)
    required = None

    if bound_id == THEOREM1:
        value = fro * math.sqrt(r * d / n) * (1 + math.sqrt(sr1 * s1) / gap)
        required = d * max((1 + alpha) * log_d, fro**2 / gap**2)
    elif bound_id in (LEMMA2_EQ9, LEMMA2_EQ10):
        rep = structure_coefficients(A, r, svd=svd)
        scale = fro * math.sqrt(d / n)
        tail = math.sqrt(d * log_d / n)
        if bound_id == LEMMA2_EQ9:
            value = (rep.nu_r + rep.nu_r_inf * tail) * scale
        else:
            value = max(rep.nu_r, (1 + rep.mu_r**2 * fro / sr) * tail) * scale
    elif bound_id == THEOREM2_FLOOR:
        value = math.sqrt(r) * _need(extras, "deviation", bound_id) * sr / gap
        rep = structure_coefficients(A, r, svd=svd)
        beta = float(extras.get("beta", math.sqrt(sr)))
        ar_fro = float(np.linalg.norm(sigma[:r]))
        required = (1 + alpha) * d * log_d * fro**2 / gap**4 * max(
            rep.nu_r**2 * r * s1 * sr,
            r * s1**2 * sr1 / sr,
            sr**2 / (beta**4 * max(1 - rep.nu_r, 1e-300) ** 2) * rep.mu_r**2 * ar_fro**2,
        )
    else:
        eta = _need(extras, "eta", bound_id)
        t = _need(extras, "t", bound_id)
        base = max(1.0 - eta * gap / 5.0, 0.0)
        value = base ** (t / 2.0) * float(extras.get("delta0", 1.0))
    return BoundReport(bound_id, float(value), required)


def measure_sketch_deviation(s, B):
    """Spectral norm of ``P_Omega(B) - B`` using the sketch's mask and probabilities."""
    B = as_matrix(B)
    if B.shape != tuple(s.shape):
        raise InputError(f"matrix shape {B.shape} does not match sketch shape {s.shape}")
    D = -B.copy()
    D[s.rows, s.cols] += B[s.rows, s.cols] / s.probs
    return float(np.linalg.norm(D, 2))

