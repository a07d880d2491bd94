"""Order-book-modulated Hawkes processes.

A point process whose intensity factors as lambda(t) = h(t) * g(t): a
self-exciting exponential-kernel baseline h multiplied by a nonnegative
linear function g(t) = X(t)'b of encoded order-book covariates.  The package
covers simulation by thinning, streaming quadratic-loss estimation with an
l1 budget, exact likelihood evaluation and model comparison, and ingestion
of LOBSTER-format market data.
"""

__version__ = "0.1.0"

from .covariates import (
    ENCODER_QUANTILES,
    EncoderSpec,
    build_raw_covariates,
    encode_path,
    ewma,
    fit_encoder,
    one_hot_encode,
    sample_and_lag,
    seasonal,
    trade_imbalance,
    volume_imbalance,
)
from .estimator import (
    EnvCoefficients,
    EstimatorError,
    FitAccumulators,
    FitConfig,
    FitResult,
    accumulate,
    alternate_fit,
    box_budget,
    choose_B,
    fit_kernel,
    heuristic_budget,
    solve_b,
)
from .evaluator import (
    ComparisonResult,
    ModelIntegrityError,
    ModelSpec,
    compare,
    log_likelihood,
    time_rescaling_residuals,
)
from .ingest import (
    BookStream,
    ParseError,
    TradeStream,
    conflate,
    extract_events,
    load_streams,
    parse_lobster,
    save_streams,
    synchronize,
)
from .kernel import (
    BranchingRatio,
    KernelParams,
    KernelState,
    ParameterBounds,
    advance,
    branching_ratio,
    h_at,
    integrate_h,
    integrate_hg_squared,
)
from .simulator import SimDesign, SimMetrics, UnstableDesignError, error_alpha, fp_fn, simulate
from .streams import NS_PER_SEC, CovariatePath, EventStream, RawCovariatePath

__all__ = [
    "__version__",
    "NS_PER_SEC",
    "EventStream",
    "CovariatePath",
    "RawCovariatePath",
    "KernelParams",
    "KernelState",
    "ParameterBounds",
    "BranchingRatio",
    "h_at",
    "advance",
    "integrate_h",
    "integrate_hg_squared",
    "branching_ratio",
    "ENCODER_QUANTILES",
    "EncoderSpec",
    "ewma",
    "seasonal",
    "volume_imbalance",
    "trade_imbalance",
    "build_raw_covariates",
    "fit_encoder",
    "one_hot_encode",
    "encode_path",
    "sample_and_lag",
    "FitAccumulators",
    "FitConfig",
    "FitResult",
    "EnvCoefficients",
    "EstimatorError",
    "accumulate",
    "solve_b",
    "fit_kernel",
    "alternate_fit",
    "heuristic_budget",
    "box_budget",
    "choose_B",
    "ModelSpec",
    "ModelIntegrityError",
    "ComparisonResult",
    "log_likelihood",
    "compare",
    "time_rescaling_residuals",
    "BookStream",
    "TradeStream",
    "ParseError",
    "parse_lobster",
    "conflate",
    "synchronize",
    "extract_events",
    "save_streams",
    "load_streams",
    "SimDesign",
    "SimMetrics",
    "UnstableDesignError",
    "simulate",
    "error_alpha",
    "fp_fn",
]
