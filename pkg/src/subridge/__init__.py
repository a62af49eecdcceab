"""Row-sampled solvers for ridge regression with many more features than observations.

The package solves (A A^T + lam I) systems through the dual representation, so
the cost is driven by n, not p. The expensive Gram product is replaced by an
importance-sampled estimate over feature columns; several sampling schemes and
an iterative refinement loop around a pilot preconditioner are provided, along
with data generators, statistical verification checks, a benchmark harness,
and a CLI.
"""

from .bench import ExperimentConfig, parse_config, run_bench
from .datagen import SyntheticDataset, gen_example1, gen_example2, generate
from .dataio import (
    DatasetManifest,
    LoadedDataset,
    load_csv_matrix,
    load_manifest,
    load_run_records,
    save_manifest,
    save_run_records,
    save_solution_csv,
)
from .linalg import (
    SvdFactors,
    gathered_columns,
    gram,
    sampled_gram,
    spd_inverse,
    spd_solve,
    thin_svd,
)
from .metrics import (
    AsymptoticVariance,
    CheckReport,
    asymptotic_variance,
    decay_check,
    error_bound_check,
    estimation_error,
    finite_sample_covariance,
    mc_variance_check,
    prediction_error,
    risk_bound_check,
    risk_mc,
    trace_minimality_check,
    variance_trace,
    variance_trace_lower_bound,
)
from .sampling import (
    METHODS,
    AliasTable,
    ProbabilityVector,
    SamplingPlan,
    draw_plan,
    mix_uniform,
    probs_coefficient_weighted,
    probs_column,
    probs_for_method,
    probs_leverage,
    probs_ridge_leverage,
    probs_rsis,
    probs_to_csv,
    probs_uniform,
    recommended_sample_size,
)
from .solvers import (
    IterationTrace,
    IterativeConfig,
    ProblemInstance,
    RidgeSolution,
    iterations_needed,
    pilot_preconditioner,
    refine_fixed,
    ridge_exact,
    subsampled_ridge,
    two_step,
)
from .util import config_digest, derive_seed, file_digest

__version__ = "0.1.0"

__all__ = [
    "AliasTable",
    "AsymptoticVariance",
    "CheckReport",
    "DatasetManifest",
    "ExperimentConfig",
    "IterationTrace",
    "IterativeConfig",
    "LoadedDataset",
    "METHODS",
    "ProbabilityVector",
    "ProblemInstance",
    "RidgeSolution",
    "SamplingPlan",
    "SvdFactors",
    "SyntheticDataset",
    "asymptotic_variance",
    "config_digest",
    "decay_check",
    "derive_seed",
    "draw_plan",
    "error_bound_check",
    "estimation_error",
    "file_digest",
    "finite_sample_covariance",
    "gathered_columns",
    "gen_example1",
    "gen_example2",
    "generate",
    "gram",
    "iterations_needed",
    "load_csv_matrix",
    "load_manifest",
    "load_run_records",
    "mc_variance_check",
    "mix_uniform",
    "parse_config",
    "pilot_preconditioner",
    "prediction_error",
    "probs_coefficient_weighted",
    "probs_column",
    "probs_for_method",
    "probs_leverage",
    "probs_ridge_leverage",
    "probs_rsis",
    "probs_to_csv",
    "probs_uniform",
    "recommended_sample_size",
    "refine_fixed",
    "ridge_exact",
    "risk_bound_check",
    "risk_mc",
    "run_bench",
    "sampled_gram",
    "save_manifest",
    "save_run_records",
    "save_solution_csv",
    "spd_inverse",
    "spd_solve",
    "subsampled_ridge",
    "thin_svd",
    "trace_minimality_check",
    "two_step",
    "variance_trace",
    "variance_trace_lower_bound",
]
