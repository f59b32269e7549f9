"""Monte Carlo simulation, exact enumeration and error bounds for median-rule clock grids."""

__version__ = "0.1.0"

from .errors import ConfigurationError, GuardRefusal, InconsistencyError  # noqa: E402
from .grid import (  # noqa: E402
    ConeSpec,
    GridSample,
    complement_sample,
    evaluate_delays,
    extract_skew,
    median3,
    simulate_sample,
)
from .models import DelayModel  # noqa: E402
from .oracle import ExactPmf, exact_delay_pmf, exact_mean, exact_skew_pmf  # noqa: E402
from .rng import DRAW_ORDER, RngStream, derive_stream, os_stream  # noqa: E402
from .stats import (  # noqa: E402
    ConfidenceBand,
    Histogram,
    SweepResult,
    TailFit,
    chernoff_bucket_bounds,
    confidence_band,
    dkw_epsilon,
    ecdf_and_qq,
    empirical_stddev,
    fit_exponential_tail,
    fit_power_law,
    normal_quantile,
    stddev_interval,
)

__all__ = [
    "ConeSpec", "ConfidenceBand", "ConfigurationError", "DRAW_ORDER", "DelayModel",
    "ExactPmf", "GridSample", "GuardRefusal", "Histogram", "InconsistencyError",
    "RngStream", "SweepResult", "TailFit", "chernoff_bucket_bounds", "complement_sample",
    "confidence_band", "derive_stream", "dkw_epsilon", "ecdf_and_qq", "empirical_stddev",
    "evaluate_delays", "exact_delay_pmf", "exact_mean", "exact_skew_pmf", "extract_skew",
    "fit_exponential_tail", "fit_power_law", "median3", "normal_quantile", "os_stream",
    "simulate_sample", "stddev_interval",
]
