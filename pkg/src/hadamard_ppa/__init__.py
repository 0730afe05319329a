"""Proximal point iterations for weakly convex quasi-convex functions on CAT(0) spaces."""

from .errors import (
    ArgumentError,
    CapabilityError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    PreconditionError,
    StepSizeError,
)
from .geodesic import (
    AsymptoticCenter,
    GeodesicSpace,
    SearchOptions,
    asymptotic_center,
    distance,
    geodesic_point,
    quasi_inner,
    tail_radius,
)
from .spaces import (
    EuclideanSpace,
    PoincareBall,
    ProductSpace,
    SpiderPoint,
    SpiderSpace,
    conformance_report,
    make_space,
)
from . import objectives
from .objectives import (
    Objective,
    ProbeOptions,
    check_convexity_class,
    evaluate,
    make_objective,
    slope_estimate,
)
from .resolvent import (
    GridSpec,
    ResolventOptions,
    ResolventResult,
    check_projection_property,
    oracle_resolve,
    resolve,
    step_bound,
)
from .ppa import (
    Schedule,
    StopCriteria,
    Trajectory,
    compute_monitors,
    critical_point_residual,
    fejer_check,
    real_sequence_products,
    run,
    strong_qc_rate_check,
    tilde_inequality_check,
    value_classification,
)
from .harness import ExperimentConfig, RunReport, compare_runs, load_config, parse_config, replay, run_experiment

__version__ = "0.1.0"
