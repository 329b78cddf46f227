"""hftails: heavy-tail analysis of high-frequency financial returns.

Tick ingestion with trading calendars, previous-tick resampling onto nested
second-to-hour grids, normalized log-returns, rank-based CCDFs, power-law /
stretched-exponential / q-Gaussian tail fits, Hill cross-checks, correlation
matrices with Epps curves and rolling windows, artificial quote-sum indices,
and seeded synthetic oracles with known tail exponents.
"""

__version__ = "0.1.0"

from ._validation import DataWarning
from .calendars import TradingCalendar, load_calendar, parse_calendar_text
from .ccdf import EmpiricalCCDF, build_ccdf, tail_points
from .correlation import (CorrelationMatrix, EppsCurve, InsufficientOverlapError,
                          PowerIterationResult, correlation_matrix, epps_curve,
                          largest_eigenvalue, mean_offdiag, pearson,
                          rolling_mean_correlation)
from .indexes import IndexSeries, build_index, index_tail_experiment
from .sampling import (DEFAULT_DT_GRID, NormalizationError, PeriodMask,
                       PriceSeries, RawReturns, ReturnSeries, excise,
                       log_returns, normalize, returns_at, sample_prices)
from .synth import (DistSpec, generate, parse_dist_spec, simulate_async_pair,
                    synthetic_tick_series, tail_index_of, write_ticks)
from .tailfit import (FitConfig, FitFailure, HillEstimate, HillTail,
                      PowerLawTail, QGaussianTail, StretchedExponentialTail,
                      TailFitError, TailFitResult, alpha_to_q,
                      evaluate_log_ccdf, fit_all, fit_power_law,
                      fit_q_gaussian, fit_stretched_exp, hill_estimator,
                      q_gaussian_pdf, q_to_alpha)
from .ticks import (ParseError, ParseStats, Tick, TickFormat, TickSeries,
                    mid_price, parse_ticks, session_filter, tick_price)

__all__ = [
    "__version__",
    "DataWarning",
    "TradingCalendar", "load_calendar", "parse_calendar_text",
    "Tick", "TickSeries", "TickFormat", "ParseError", "ParseStats",
    "parse_ticks", "mid_price", "tick_price", "session_filter",
    "PriceSeries", "RawReturns", "ReturnSeries", "PeriodMask",
    "NormalizationError", "DEFAULT_DT_GRID",
    "sample_prices", "log_returns", "normalize", "excise", "returns_at",
    "EmpiricalCCDF", "build_ccdf", "tail_points",
    "TailFitResult", "TailFitError", "FitFailure", "FitConfig", "HillEstimate",
    "fit_power_law", "fit_stretched_exp", "fit_q_gaussian", "fit_all",
    "hill_estimator", "q_gaussian_pdf", "alpha_to_q", "q_to_alpha",
    "evaluate_log_ccdf",
    "PowerLawTail", "StretchedExponentialTail", "QGaussianTail", "HillTail",
    "CorrelationMatrix", "EppsCurve", "PowerIterationResult",
    "InsufficientOverlapError", "pearson", "correlation_matrix",
    "mean_offdiag", "largest_eigenvalue", "epps_curve",
    "rolling_mean_correlation",
    "IndexSeries", "build_index", "index_tail_experiment",
    "DistSpec", "generate", "tail_index_of", "write_ticks",
    "simulate_async_pair", "synthetic_tick_series", "parse_dist_spec",
]
