"""Recover the best rank-r approximation of a matrix from a random sample of its entries."""

from .diagnostics import error_metrics, evaluate_bound, measure_sketch_deviation, structure_coefficients
from .errors import (
    BestRankError,
    ConsistencyError,
    DegeneracyError,
    DivergenceError,
    FormatError,
    InfeasibleError,
    InputError,
)
from .estimators import (
    EstimatorConfig,
    PgdTrace,
    init_factors,
    naive_estimate,
    objective_gradient,
    objective_value,
    pgd_estimate,
    project_feasible,
)
from .matrix_core import (
    FactorPair,
    SvdResult,
    norm_suite,
    procrustes_distance,
    row_col_norms,
    svd_deterministic,
    truncate_rank,
)
from .sampling import (
    SamplingScheme,
    SketchBundle,
    build_sketch,
    calibrate_budget,
    compute_probabilities,
    draw_mask,
    expected_count,
    sample_sketch,
    sketch_to_dense,
)

__version__ = "0.1.0"
