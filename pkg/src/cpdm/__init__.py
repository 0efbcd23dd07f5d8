"""Exact closest pair in metrics of bounded doubling dimension."""

from .annulus import derive_c, radii_schedule, sep_ann, sparse_sep_ann
from .closest import ClosestPairResult, RunStats, closest_pair, closest_pair_audited
from .metric_core import (
    AlgorithmConfig,
    InputError,
    IterationCapError,
    MetricSpace,
    PreconditionError,
    RunContext,
    brute_force_closest_pair,
    validate_metric,
)
from .spaces import (
    EuclideanSpace,
    ExplicitSpace,
    LayeredExampleSpace,
    UniformDiscreteSpace,
    doubling_dimension_exact,
    generate_instance,
    load_matrix_file,
    load_points_csv,
    packing_check,
)

__version__ = "0.1.0"
