"""Sequential surveillance of systemic risk forecasts.

Monitors VaR together with a systemic risk measure (CoVaR, reverse CoVaR,
CoES, or MES) for K institutions against a reference series: forecasts and
realizations become violation evidence streams, rolling-window detectors
standardize coverage/clustering (and, for the tail-PIT measures,
distribution/autocorrelation) statistics, and Monte Carlo calibrated
time-uniform critical values bound the probability of any false alarm over
the whole horizon while attributing the first alarm to a specific
institution.  A DCC/CCC-GARCH simulator and true-parameter forecaster
support calibration and replication studies end to end.
"""

from .core_series import (
    ForecastRecord,
    IndicatorPanel,
    MeasureKind,
    ObservationRecord,
    RiskLevels,
    build_indicator_panel,
    cumulative_violation,
    identification_value,
    joint_indicator,
    var_indicator,
)
from .detectors import (
    DEFAULT_WEIGHT,
    DetectorTrace,
    NullMoments,
    daniell_kernel,
    detector_trace,
    gini_from_window,
    hong_from_window,
    ks_from_window,
    null_cdf_H,
    sample_autocorr,
    standardize,
    window_violation_stat,
)
from .dgp import (
    BreakSpec,
    CovForecast,
    DccParams,
    SimulatedPanel,
    baseline_params,
    bivariate_t_upper_tail,
    covar_forecast,
    forecast_arrays,
    make_forecast_panel,
    rcovar_forecast,
    simulate_dcc,
    student_t_quantile,
    tail_pit,
)
from .errors import (
    CalibrationError,
    ConfigError,
    NumericError,
    RiskSentinelError,
    SchemaError,
)
from .monitor import (
    AlarmRecord,
    MonitorConfig,
    MonitorReport,
    MonitorState,
    StepOutcome,
    monitor_finalize,
    monitor_init,
    monitor_step,
    run_monitor,
)
from .nullsim import (
    CriticalValues,
    SupSamples,
    calibrate_for_measure,
    calibrate_intersection,
    calibrate_union,
    estimate_null_moments,
    simulate_null_path,
    sup_detector_samples,
    threshold_at,
)
from .studies import (
    CellResult,
    StudyCell,
    StudyPreset,
    make_preset,
    run_study,
    scale_preset,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # measures and records
    "MeasureKind",
    "RiskLevels",
    "ObservationRecord",
    "ForecastRecord",
    "IndicatorPanel",
    "build_indicator_panel",
    "var_indicator",
    "joint_indicator",
    "cumulative_violation",
    "identification_value",
    # detectors
    "DEFAULT_WEIGHT",
    "NullMoments",
    "DetectorTrace",
    "detector_trace",
    "window_violation_stat",
    "gini_from_window",
    "ks_from_window",
    "null_cdf_H",
    "hong_from_window",
    "sample_autocorr",
    "daniell_kernel",
    "standardize",
    # null calibration
    "SupSamples",
    "CriticalValues",
    "simulate_null_path",
    "estimate_null_moments",
    "sup_detector_samples",
    "threshold_at",
    "calibrate_intersection",
    "calibrate_union",
    "calibrate_for_measure",
    # monitoring
    "MonitorConfig",
    "MonitorState",
    "AlarmRecord",
    "StepOutcome",
    "MonitorReport",
    "monitor_init",
    "monitor_step",
    "monitor_finalize",
    "run_monitor",
    # data generation and forecasting
    "DccParams",
    "BreakSpec",
    "CovForecast",
    "SimulatedPanel",
    "baseline_params",
    "simulate_dcc",
    "student_t_quantile",
    "bivariate_t_upper_tail",
    "covar_forecast",
    "rcovar_forecast",
    "tail_pit",
    "make_forecast_panel",
    "forecast_arrays",
    # studies
    "StudyPreset",
    "StudyCell",
    "CellResult",
    "make_preset",
    "scale_preset",
    "run_study",
    # errors
    "RiskSentinelError",
    "SchemaError",
    "ConfigError",
    "CalibrationError",
    "NumericError",
]
