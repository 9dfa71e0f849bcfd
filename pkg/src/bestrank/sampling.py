"""Entrywise sampling schemes, budget calibration and sketch construction.

Two schemes are provided. ``ENTRY`` weights each entry by its own magnitude::

    p_ij = min{ (n/2) (a_ij^2 / ||A||_F^2 + |a_ij| / ||A||_l1), 1 }

``ROWCOL`` replaces the squared entry with the squared norms of its row and
column, which removes the need for incoherence::

    p_ij = min{ (n/3) (||A_i.||^2 / (d2 ||A||_F^2) + ||A_.j||^2 / (d1 ||A||_F^2)
                       + |a_ij| / ||A||_l1), 1 }

Masks are drawn with a Philox generator keyed by the seed. Entry ``(i, j)``
always consumes uniform number ``i * d2 + j`` of that stream, so a mask depends
only on ``(p, seed)`` and never on traversal order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, InfeasibleError, InputError
from .matrix_core import as_matrix, row_col_norms

_BISECT_ITERS = 200


class SamplingScheme(enum.Enum):
    ENTRY = "entry"
    ROWCOL = "rowcol"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown sampling scheme {value!r} (expected 'entry' or 'rowcol')") from None


def derive_seed(seed, *keys):
    """Derive an independent 64-bit seed from ``seed`` and integer ``keys``."""
    ss = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _scores(A, scheme):
    """Unclamped per-unit-budget scores; ``p = min(n * score, 1)``."""
    A = as_matrix(A)
    scheme = SamplingScheme.parse(scheme)
    absA = np.abs(A)
    l1 = absA.sum()
    fro2 = float(np.sum(A * A))
    if l1 == 0.0:
        raise InputError("sampling probabilities are undefined for an all-zero matrix")
    if scheme is SamplingScheme.ENTRY:
        return (A * A / fro2 + absA / l1) / 2.0
    d1, d2 = A.shape
    rows, cols = row_col_norms(A)
    return (
        (rows**2)[:, None] / (d2 * fro2)
        + (cols**2)[None, :] / (d1 * fro2)
        + absA / l1
    ) / 3.0


def compute_probabilities(A, scheme, n):
    """Inclusion probability of every entry under ``scheme`` with budget ``n``."""
    if not n > 0:
        raise InputError(f"budget n must be positive, got {n}")
    return np.minimum(n * _scores(A, scheme), 1.0)


def expected_count(p):
    return float(np.sum(p))


def calibrate_budget(A, scheme, target_count):
    """Find the budget ``n`` whose expected sample count equals ``target_count``.

    The expected count ``sum_ij min(n * score_ij, 1)`` is continuous and
    nondecreasing in ``n``, so plain bisection converges. Targets above the
    number of entries with a positive score (but within ``d1 * d2``) saturate:
    the smallest ``n`` that sets all of them to 1 is returned.
    """
    A = as_matrix(A)
    d1, d2 = A.shape
    if not target_count > 0:
        raise InputError(f"target count must be positive, got {target_count}")
    if target_count > d1 * d2:
        raise InfeasibleError(f"target count {target_count} exceeds the {d1 * d2} available entries")
    scores = _scores(A, scheme)
    positive = scores[scores > 0]
    with np.errstate(over="ignore"):
        n_sat = 1.0 / positive.min()
    if target_count >= positive.size:
        if not np.isfinite(n_sat):
            raise InfeasibleError("saturating every entry needs a budget beyond floating-point range")
        return float(n_sat)

    def count(n):
        return float(np.minimum(n * scores, 1.0).sum())

    # scores sum to one, so count(n) <= n and n = target is a lower bracket
    lo, hi = 0.0, float(target_count)
    while count(hi) < target_count:
        lo, hi = hi, 2.0 * hi
        if not np.isfinite(hi):
            raise InfeasibleError(f"target count {target_count} needs a budget beyond floating-point range")
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if count(mid) < target_count:
            lo = mid
        else:
            hi = mid
    return hi


def uniform_field(shape, seed):
    """Uniform [0, 1) numbers laid out row-major, one per entry, keyed by ``seed``."""
    d1, d2 = shape
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return gen.random(d1 * d2).reshape(d1, d2)


def draw_mask(p, seed):
    """Boolean mask with entry ``(i, j)`` set independently with probability ``p[i, j]``."""
    p = np.asarray(p, dtype=float)
    return uniform_field(p.shape, seed) < p


@dataclass(frozen=True, eq=False)
class SketchBundle:
    """Sampled entries of a matrix plus the side information the estimators use.

    Entries are stored raw as ``(rows[k], cols[k], values[k], probs[k])`` sorted
    by ``(row, col)``. ``row_norms``, ``col_norms``, ``fro_norm`` and ``l1_norm``
    are exact norms of the source matrix.
    """

    shape: tuple
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    probs: np.ndarray
    row_norms: np.ndarray
    col_norms: np.ndarray
    fro_norm: float
    l1_norm: float
    scheme: SamplingScheme
    budget_n: float
    seed: int

    def __post_init__(self):
        d1, d2 = self.shape
        k = len(self.rows)
        if not (len(self.cols) == len(self.values) == len(self.probs) == k):
            raise ConsistencyError("entry arrays have different lengths")
        if len(self.row_norms) != d1 or len(self.col_norms) != d2:
            raise ConsistencyError("side-information norms do not match the shape")
        if k:
            if self.rows.min() < 0 or self.rows.max() >= d1 or self.cols.min() < 0 or self.cols.max() >= d2:
                raise ConsistencyError("entry index out of range")
            if np.any(self.probs <= 0) or np.any(self.probs > 1):
                raise ConsistencyError("stored probabilities must lie in (0, 1]")
            key = self.rows.astype(np.int64) * d2 + self.cols
            if np.any(np.diff(key) <= 0):
                raise ConsistencyError("entries must be unique and sorted by (row, col)")

    @property
    def entry_count(self):
        return len(self.rows)

    def weights(self):
        """Inverse-probability weighted values ``a_ij / p_ij`` of the sampled entries."""
        return self.values / self.probs

    def to_dense(self):
        return sketch_to_dense(self)


def build_sketch(A, p, mask, scheme, n, seed):
    A = as_matrix(A)
    p = np.asarray(p, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if p.shape != A.shape or mask.shape != A.shape:
        raise ConsistencyError("matrix, probabilities and mask must share a shape")
    if np.any(mask & (p <= 0)):
        i, j = np.argwhere(mask & (p <= 0))[0]
        raise ConsistencyError(f"mask includes entry ({i}, {j}) whose probability is zero")
    rows, cols = np.nonzero(mask)
    rn, cn = row_col_norms(A)
    return SketchBundle(
        shape=A.shape,
        rows=rows.astype(np.int64),
        cols=cols.astype(np.int64),
        values=A[rows, cols].copy(),
        probs=p[rows, cols].copy(),
        row_norms=rn,
        col_norms=cn,
        fro_norm=float(np.linalg.norm(A)),
        l1_norm=float(np.abs(A).sum()),
        scheme=SamplingScheme.parse(scheme),
        budget_n=float(n),
        seed=int(seed),
    )


def sketch_to_dense(s):
    """The sparsified matrix P_Omega(A): ``a_ij / p_ij`` where sampled, zero elsewhere."""
    out = np.zeros(s.shape)
    out[s.rows, s.cols] = s.weights()
    return out


def sample_sketch(A, scheme, seed, n=None, fraction=None):
    """Sample a sketch of ``A`` given either a budget ``n`` or a target expected ``fraction``."""
    A = as_matrix(A)
    if (n is None) == (fraction is None):
        raise InputError("give exactly one of n (budget) or fraction")
    if n is None:
        if not 0 < fraction <= 1:
            raise InfeasibleError(f"sampling fraction must lie in (0, 1], got {fraction}")
        n = calibrate_budget(A, scheme, fraction * A.size)
    p = compute_probabilities(A, scheme, n)
    return build_sketch(A, p, draw_mask(p, seed), scheme, n, seed)
