from .convergence import (
    COMBINATIONS,
    ConvergenceReport,
    convergence_battery,
    convergence_counts,
    stationarity_counts,
    stationarity_trio,
)
from .regression import (
    aggregate_by_date,
    design,
    dummies_from_labels,
    linear_restriction_test,
    mincer_zarnowitz,
    mz_with_dummies,
    ols,
    time_trend,
)
from .results import RegressionResult, TestResult
from .twosample import welch_t
from .unitroot import adf_test, indicates_stationary, kpss_test, mackinnon_p, pp_test

__all__ = [
    "COMBINATIONS",
    "ConvergenceReport",
    "RegressionResult",
    "TestResult",
    "adf_test",
    "aggregate_by_date",
    "convergence_battery",
    "convergence_counts",
    "design",
    "dummies_from_labels",
    "indicates_stationary",
    "kpss_test",
    "linear_restriction_test",
    "mackinnon_p",
    "mincer_zarnowitz",
    "mz_with_dummies",
    "ols",
    "pp_test",
    "stationarity_counts",
    "stationarity_trio",
    "time_trend",
    "welch_t",
]
