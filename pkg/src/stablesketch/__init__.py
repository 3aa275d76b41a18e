"""Norm and distance estimation with stable and very sparse stable random projections."""

from ._validation import DomainError
from .bounds import (
    BoundReport,
    SamplePlan,
    bound_report,
    c_alpha,
    g_left,
    g_right,
    m_left,
    m_right,
    plan_sample_size,
    tail_probability,
)
from .calibration import CalibrationEntry, calibrate_median, read_calibration, write_calibration
from .estimators import (
    Estimate,
    estimate,
    estimate_gm,
    estimate_median,
    estimate_mle_zero_plus,
    estimate_power_gm,
    gm_correction_log,
    gm_variance,
    median_mse_zero_plus,
    power_gm_variance,
    stable_abs_moment,
)
from .projector import (
    ProjectionSpec,
    Sketch,
    SketchFormatError,
    UpdateEvent,
    deserialize_sketch,
    entry_at,
    load_sketch,
    project_vector,
    save_sketch,
    serialize_sketch,
    sketch_diff,
    sketch_update,
)
from .sampler import RandomKey, SparseEntryDist, StableParams, sample_pareto, sample_sparse_entry, sample_stable
from .sparsity import check_convergence_condition, convergence_rate, recommend_beta, sparse_scale_constant
from .transformer import StableRandomProjection

__version__ = "0.1.0"
