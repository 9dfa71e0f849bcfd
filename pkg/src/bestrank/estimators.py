"""Estimators of the best rank-r approximation from a :class:`SketchBundle`.

``naive_estimate`` truncates the sparsified matrix. ``pgd_estimate`` runs
projected gradient descent on the balanced factorized objective::

    f(X, Y) = 1/2 sum_{(i,j) sampled} (a_ij - (X Y^T)_ij)^2 / p_ij
              + 1/8 ||X^T X - Y^T Y||_F^2

over factor pairs whose rows satisfy ``||X_i.|| <= ||A_i.|| / beta`` and
``||Y_j.|| <= ||A_.j|| / beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import DivergenceError, InputError
from .matrix_core import FactorPair, check_rank, svd_deterministic, truncate_svd
from .sampling import sketch_to_dense

GRAD_TOL = "grad_tol"
MAX_ITERS = "max_iters"
STALLED = "stalled"

# rows within this relative slack of their cap are treated as feasible, which
# makes the projection exactly idempotent despite rounding in the rescale
_CAP_SLACK = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings for :func:`pgd_estimate`.

    ``beta="auto"`` picks ``sqrt(sigma_r(P_Omega(A)) / 2)``. ``step_size=None``
    selects backtracking (Armijo) line search; a float gives a fixed step.
    """

    rank: int
    beta: float | str = "auto"
    step_size: float | None = None
    initial_step: float = 1.0
    armijo_c1: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 30
    max_iters: int = 100
    grad_tol: float = 1e-6

    def __post_init__(self):
        if self.beta != "auto" and not (isinstance(self.beta, (int, float)) and self.beta > 0):
            raise InputError(f"beta must be 'auto' or a positive number, got {self.beta!r}")
        if self.step_size is not None and not self.step_size > 0:
            raise InputError(f"step size must be positive, got {self.step_size}")
        if not (0 < self.shrink < 1 and 0 < self.armijo_c1 < 1):
            raise InputError("line search needs 0 < shrink < 1 and 0 < c1 < 1")
        if self.max_iters < 1 or self.max_halvings < 0 or not self.grad_tol > 0:
            raise InputError("max_iters >= 1, max_halvings >= 0 and grad_tol > 0 are required")


@dataclass
class PgdTrace:
    """Per-iteration history of a PGD run.

    ``objective[t]`` and ``grad_inf[t]`` describe iterate ``t`` (index 0 is the
    initialization); ``steps[t]`` is the step size that produced iterate ``t+1``.
    """

    objective: list = field(default_factory=list)
    grad_inf: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    reason: str = MAX_ITERS
    beta: float = float("nan")

    @property
    def iterations(self):
        return len(self.steps)


class PgdResult(NamedTuple):
    factors: FactorPair
    estimate: np.ndarray
    trace: PgdTrace


def naive_estimate(s, r):
    """Rank-``r`` truncation of the sparsified matrix ``P_Omega(A)``."""
    r = check_rank(r, s.shape)
    return truncate_svd(svd_deterministic(sketch_to_dense(s)), r)


class SampledObjective:
    """Objective and gradient that touch only the sampled entries of a sketch."""

    def __init__(self, s):
        d1, d2 = s.shape
        self.shape = s.shape
        self.rows = s.rows
        self.cols = s.cols
        self.values = s.values
        self.inv_p = 1.0 / s.probs
        indptr = np.concatenate([[0], np.cumsum(np.bincount(s.rows, minlength=d1))])
        # entries are sorted by (row, col), so CSR data order equals entry order
        self._indptr = indptr
        self._indices = s.cols

    def _fitted(self, x, y):
        return np.einsum("ij,ij->i", x[self.rows], y[self.cols])

    def value(self, x, y):
        resid = self._fitted(x, y) - self.values
        gram = x.T @ x - y.T @ y
        return 0.5 * float(np.dot(resid * resid, self.inv_p)) + 0.125 * float(np.sum(gram * gram))

    def gradient(self, x, y):
        resid = (self._fitted(x, y) - self.values) * self.inv_p
        S = sp.csr_matrix((resid, self._indices, self._indptr), shape=self.shape)
        gram = x.T @ x - y.T @ y
        gx = S @ y + 0.5 * (x @ gram)
        gy = S.T @ x - 0.5 * (y @ gram)
        return np.asarray(gx), np.asarray(gy)


def objective_value(s, F):
    return SampledObjective(s).value(F.x, F.y)


def objective_gradient(s, F):
    return FactorPair(*SampledObjective(s).gradient(F.x, F.y))


def _row_caps(norms, beta):
    with np.errstate(divide="ignore", invalid="ignore"):
        caps = norms / beta
    # 0 / 0 -> 0 pins zero rows; positive / 0 leaves the row unconstrained
    return np.where(norms == 0, 0.0, caps)


def _project_rows(M, caps):
    norms = np.linalg.norm(M, axis=1)
    over = norms > caps * (1 + _CAP_SLACK)
    if not over.any():
        return M
    scale = np.ones_like(norms)
    scale[over] = caps[over] / norms[over]
    return M * scale[:, None]


def project_feasible(F, s, beta):
    """Rescale oversized rows of each factor onto the caps ``||A_i.|| / beta``."""
    if not beta >= 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    return FactorPair(
        _project_rows(F.x, _row_caps(s.row_norms, beta)),
        _project_rows(F.y, _row_caps(s.col_norms, beta)),
    )


def auto_beta(svd, r):
    return math.sqrt(svd.sigma[r - 1] / 2.0)


def init_factors(s, r, beta="auto", svd=None):
    """Balanced spectral initialization ``X0 = U0 S0^{1/2}``, ``Y0 = V0 S0^{1/2}``, then projected.

    Returns the projected factors and the numeric beta used.
    """
    r = check_rank(r, s.shape)
    if svd is None:
        svd = svd_deterministic(sketch_to_dense(s))
    root = np.sqrt(svd.sigma[:r])
    F0 = FactorPair(svd.U[:, :r] * root, svd.V[:, :r] * root)
    b = auto_beta(svd, r) if beta == "auto" else float(beta)
    return project_feasible(F0, s, b), b


def _grad_sq(gx, gy):
    return float(np.sum(gx * gx) + np.sum(gy * gy))


def _grad_inf(gx, gy):
    return max(float(np.abs(gx).max(initial=0.0)), float(np.abs(gy).max(initial=0.0)))


def pgd_estimate(s, cfg, svd=None):
    """Projected gradient descent from the spectral initialization.

    Each iteration takes a gradient step on both factors and projects the
    result back onto the feasible set. With line search, the step starts at
    ``cfg.initial_step`` and is shrunk until the projected trial point passes
    the Armijo test ``f(new) <= f(old) - c1 * eta * ||grad||_F^2``. If every
    trial fails, the smallest step is kept when it does not increase ``f``;
    otherwise the run stops with reason ``"stalled"``.

    ``svd`` may carry a precomputed :func:`svd_deterministic` of ``P_Omega(A)``.
    Raises :class:`DivergenceError` when the objective becomes non-finite.
    """
    r = check_rank(cfg.rank, s.shape)
    (x, y), beta = init_factors(s, r, cfg.beta, svd=svd)
    obj = SampledObjective(s)
    caps_x = _row_caps(s.row_norms, beta)
    caps_y = _row_caps(s.col_norms, beta)

    def project(xn, yn):
        return _project_rows(xn, caps_x), _project_rows(yn, caps_y)

    trace = PgdTrace(beta=beta)
    f = obj.value(x, y)
    if not math.isfinite(f):
        raise DivergenceError(0)
    gx, gy = obj.gradient(x, y)
    trace.objective.append(f)
    trace.grad_inf.append(_grad_inf(gx, gy))

    # overflow is reported through DivergenceError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(cfg.max_iters):
            if trace.grad_inf[-1] <= cfg.grad_tol:
                trace.reason = GRAD_TOL
                break
            if cfg.step_size is not None:
                eta = cfg.step_size
                xn, yn = project(x - eta * gx, y - eta * gy)
                fn = obj.value(xn, yn)
                if not math.isfinite(fn):
                    raise DivergenceError(t + 1)
            else:
                g2 = _grad_sq(gx, gy)
                eta = cfg.initial_step
                for _ in range(cfg.max_halvings + 1):
                    xn, yn = project(x - eta * gx, y - eta * gy)
                    fn = obj.value(xn, yn)
                    if math.isfinite(fn) and fn <= f - cfg.armijo_c1 * eta * g2:
                        break
                    eta_last = eta
                    eta *= cfg.shrink
                else:
                    eta = eta_last
                    if not (math.isfinite(fn) and fn <= f):
                        trace.reason = STALLED
                        break
            x, y, f = xn, yn, fn
            gx, gy = obj.gradient(x, y)
            trace.steps.append(eta)
            trace.objective.append(f)
            trace.grad_inf.append(_grad_inf(gx, gy))
        else:
            trace.reason = GRAD_TOL if trace.grad_inf[-1] <= cfg.grad_tol else MAX_ITERS

    F = FactorPair(x, y)
    return PgdResult(F, F.product(), trace)
