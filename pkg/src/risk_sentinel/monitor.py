"""Online monitoring state machine with alarm logging and attribution.

One :class:`MonitorState` consumes aligned (forecast, observation) pairs day
by day, maintains the rolling evidence windows, and — once the first window
is full — emits every detector value normalized by its calibrated critical
value.  Ratios at or above one are alarms; the first alarm is flagged and
attributed to the stream (VaR hypothesis or institution) that crossed
hardest.  Monitoring continues after alarms so the full trajectory remains
available.

The per-step evidence values are produced by the same panel-assembly routine
used offline, and the per-window statistics by the same compiled kernels as
the offline trace, so feeding a panel step by step reproduces
``detectors.detector_trace`` bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core_series import (
    ForecastRecord,
    IndicatorPanel,
    MeasureKind,
    ObservationRecord,
    RiskLevels,
    build_indicator_panel,
)
from .detectors import DEFAULT_WEIGHT, DetectorTrace, detector_trace, kappa2_table
from .errors import ConfigError, SchemaError
from .nullsim import CriticalValues

__all__ = [
    "MonitorConfig",
    "MonitorState",
    "AlarmRecord",
    "StepOutcome",
    "MonitorReport",
    "monitor_init",
    "monitor_step",
    "monitor_finalize",
    "run_monitor",
    "scan_alarms",
    "first_alarm_from_trace",
    "report_from_panel",
]


@dataclass(frozen=True)
class MonitorConfig:
    """What is being monitored: measure, levels, window, weight, panel width."""

    measure: MeasureKind
    levels: RiskLevels
    m: int
    K: int
    a: float = DEFAULT_WEIGHT

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ConfigError(f"window length must be at least 2, got {self.m}")
        if self.K < 1:
            raise ConfigError(f"need at least one institution, got K={self.K}")
        if not (0.0 <= self.a <= 1.0):
            raise ConfigError(f"detector weight must lie in [0, 1], got {self.a}")
        self.levels.validate_for(self.measure)


@dataclass(frozen=True)
class AlarmRecord:
    """One threshold crossing.

    ``kind`` is "var" for a VaR-hypothesis detector and "sys" for a systemic
    detector; ``institution`` is the 1-based institution index (None only for
    the single pooled VaR stream of CoVaR/CoES/MES).  ``first`` marks the
    attributed first alarm; at most one record carries it.
    """

    T: int
    kind: str
    institution: int | None
    normalized_value: float
    first: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("var", "sys"):
            raise ConfigError(f"alarm kind must be 'var' or 'sys', got {self.kind!r}")
        if self.normalized_value < 1.0:
            raise ConfigError(
                f"an alarm requires a normalized value >= 1, got {self.normalized_value}"
            )

    @property
    def stream(self) -> str:
        if self.institution is None:
            return self.kind
        return f"{self.kind}_{self.institution}"

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "kind": self.kind,
            "institution": self.institution,
            "stream": self.stream,
            "normalized_value": self.normalized_value,
            "first": self.first,
        }


@dataclass
class MonitorState:
    """Mutable monitoring state; create via :func:`monitor_init`."""

    config: MonitorConfig
    cv: CriticalValues
    var_buf: np.ndarray  # (n_var_streams, horizon) evidence history
    sys_buf: np.ndarray  # (K, horizon) evidence history
    steps: int = 0
    t_start: int | None = None
    norm_rows: list[np.ndarray] = field(default_factory=list)
    raw_rows: list[np.ndarray] = field(default_factory=list)
    alarms: list[AlarmRecord] = field(default_factory=list)
    first_seen: bool = False
    _dur: np.ndarray | None = None
    _buf: np.ndarray | None = None
    _cbuf: np.ndarray | None = None

    @property
    def t_current(self) -> int | None:
        if self.t_start is None:
            return None
        return self.t_start + self.steps - 1

    @property
    def n_var_streams(self) -> int:
        return self.var_buf.shape[0]


@dataclass(frozen=True)
class StepOutcome:
    """What one monitoring step produced."""

    t: int
    emitted: bool
    normalized: np.ndarray | None  # var streams then sys streams
    alarms: tuple[AlarmRecord, ...]


@dataclass(frozen=True)
class MonitorReport:
    """Everything a finished (or interrupted) monitoring run established."""

    config: MonitorConfig
    horizon: int
    t_start: int
    t_final: int
    T: np.ndarray
    raw_var: np.ndarray  # (n_var_streams, n_T) unnormalized detector values
    raw_sys: np.ndarray  # (K, n_T)
    norm_var: np.ndarray
    norm_sys: np.ndarray
    alarms: tuple[AlarmRecord, ...]
    first_alarm: AlarmRecord | None

    def raw_trace(self) -> DetectorTrace:
        """The unnormalized trace, comparable to the offline detector trace."""
        return DetectorTrace(T=self.T, var_det=self.raw_var, sys_det=self.raw_sys)

    def alarms_json(self) -> str:
        doc = {
            "measure": self.config.measure.value,
            "alpha": self.config.levels.alpha,
            "beta": self.config.levels.beta,
            "m": self.config.m,
            "K": self.config.K,
            "horizon": self.horizon,
            "t_start": self.t_start,
            "t_final": self.t_final,
            "alarms": [a.as_dict() for a in self.alarms],
            "first_alarm": None if self.first_alarm is None else self.first_alarm.as_dict(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def monitor_init(config: MonitorConfig, cv: CriticalValues) -> MonitorState:
    """Fresh monitoring state after cross-checking config against cv metadata."""
    mismatches = []
    if cv.measure is not config.measure:
        mismatches.append(f"measure {cv.measure.value} != {config.measure.value}")
    if cv.levels != config.levels:
        mismatches.append(f"levels {cv.levels} != {config.levels}")
    if cv.m != config.m:
        mismatches.append(f"window m {cv.m} != {config.m}")
    if cv.K != config.K:
        mismatches.append(f"panel width K {cv.K} != {config.K}")
    if cv.a != config.a:
        mismatches.append(f"detector weight {cv.a} != {config.a}")
    if mismatches:
        raise ConfigError(
            "critical values do not match the monitor configuration: "
            + "; ".join(mismatches)
        )
    if cv.moments.m != config.m or cv.moments.levels != config.levels:
        raise ConfigError("critical values carry moments for a different design")
    if not (cv.v > 0.0 and cv.c > 0.0):
        raise ConfigError(
            "critical values must be positive to define alarm ratios; "
            f"got v={cv.v}, c={cv.c}"
        )
    n_var = config.measure.var_stream_count(config.K)
    m = config.m
    return MonitorState(
        config=config,
        cv=cv,
        var_buf=np.zeros((n_var, cv.n)),
        sys_buf=np.zeros((config.K, cv.n)),
        _dur=np.empty(m, np.int64),
        _buf=np.empty(m, np.float64),
        _cbuf=np.empty(m, np.float64),
    )


def _window_values(state: MonitorState) -> np.ndarray:
    """Detector values for the window ending at the current step.

    Same kernels, same scan order, and same combination arithmetic as the
    offline trace; returns var-stream values followed by systemic values.
    """
    cfg = state.config
    mom = state.cv.moments
    m = cfg.m
    start = state.steps - m
    levels = cfg.levels
    out = np.empty(state.n_var_streams + cfg.K)
    tv = 1.0 - levels.beta
    mv = mom.var_vector
    for i in range(state.n_var_streams):
        raw_uc, raw_iid = _kernels.binary_window_raws(state.var_buf[i], start, m, tv, state._dur)
        out[i] = _kernels.combine_stats(raw_uc, raw_iid, mv[0], mv[1], mv[2], mv[3], cfg.a)
    ms = mom.sys_vector
    if cfg.measure.pit_based:
        kappa2 = kappa2_table(m)
        for k in range(cfg.K):
            raw_uc, raw_iid = _kernels.pit_window_raws(
                state.sys_buf[k], start, m, levels.alpha, levels.beta, kappa2,
                state._buf, state._cbuf,
            )
            out[state.n_var_streams + k] = _kernels.combine_stats(
                raw_uc, raw_iid, ms[0], ms[1], ms[2], ms[3], cfg.a
            )
    else:
        ts = (1.0 - levels.alpha) * (1.0 - levels.beta)
        for k in range(cfg.K):
            raw_uc, raw_iid = _kernels.binary_window_raws(
                state.sys_buf[k], start, m, ts, state._dur
            )
            out[state.n_var_streams + k] = _kernels.combine_stats(
                raw_uc, raw_iid, ms[0], ms[1], ms[2], ms[3], cfg.a
            )
    return out


def _stream_identity(state: MonitorState, idx: int) -> tuple[str, int | None]:
    """(kind, institution) of flat stream index ``idx`` (var streams first)."""
    return _identity_for(state.n_var_streams, idx)


def _best_crossing(row: np.ndarray) -> tuple[np.ndarray, int | None]:
    """Crossing indices of one normalized column and the attribution winner.

    The winner is the largest normalized value; exact ties go to the lowest
    stream index (var streams precede systemic streams).
    """
    idx = np.nonzero(row >= 1.0)[0]
    if idx.size == 0:
        return idx, None
    best = int(idx[0])
    for i in idx[1:]:
        if row[i] > row[best]:
            best = int(i)
    return idx, best


def _identity_for(n_var: int, idx: int) -> tuple[str, int | None]:
    if idx < n_var:
        return ("var", None) if n_var == 1 else ("var", idx + 1)
    return "sys", idx - n_var + 1


def scan_alarms(
    norm_var: np.ndarray, norm_sys: np.ndarray, T: np.ndarray
) -> tuple[tuple[AlarmRecord, ...], AlarmRecord | None]:
    """Alarm log and first-alarm attribution from a normalized trace.

    Applies exactly the step machine's rule: every ratio >= 1 is logged; at
    the earliest crossing time the largest normalized value (ties to the
    lowest stream index) carries the first flag.
    """
    n_var = norm_var.shape[0]
    norm = np.concatenate([norm_var, norm_sys], axis=0)
    hot = np.nonzero(np.any(norm >= 1.0, axis=0))[0]
    alarms: list[AlarmRecord] = []
    first: AlarmRecord | None = None
    for j in hot:
        col = norm[:, j]
        idx, best = _best_crossing(col)
        for i in idx:
            kind, institution = _identity_for(n_var, int(i))
            rec = AlarmRecord(
                T=int(T[j]),
                kind=kind,
                institution=institution,
                normalized_value=float(col[i]),
                first=(first is None and int(i) == best),
            )
            alarms.append(rec)
            if rec.first:
                first = rec
    return tuple(alarms), first


def first_alarm_from_trace(
    norm_var: np.ndarray, norm_sys: np.ndarray, T: np.ndarray
) -> AlarmRecord | None:
    """Only the attributed first alarm of a normalized trace (or None).

    Same crossing and tie rules as :func:`scan_alarms`, skipping the full
    log — the workhorse for replication studies that aggregate first-alarm
    statistics over thousands of paths.
    """
    n_var = norm_var.shape[0]
    norm = np.concatenate([norm_var, norm_sys], axis=0)
    hot = np.nonzero(np.any(norm >= 1.0, axis=0))[0]
    if hot.size == 0:
        return None
    j = int(hot[0])
    _, best = _best_crossing(norm[:, j])
    kind, institution = _identity_for(n_var, best)
    return AlarmRecord(
        T=int(T[j]),
        kind=kind,
        institution=institution,
        normalized_value=float(norm[best, j]),
        first=True,
    )


def monitor_step(
    state: MonitorState,
    forecast: ForecastRecord,
    observation: ObservationRecord,
) -> StepOutcome:
    """Consume one aligned (forecast, observation) pair.

    Emits normalized detector values once the window is full; logs every
    threshold crossing and flags the first.  Raises :class:`SchemaError` on
    time regressions/gaps, panel-width mismatches, or once the calibrated
    horizon is exhausted.
    """
    cfg = state.config
    if state.steps >= state.cv.n:
        raise SchemaError(
            f"monitoring horizon exhausted: the critical values cover {state.cv.n} "
            "steps and the time-uniform guarantee does not extend beyond them"
        )
    if observation.t != forecast.t:
        raise SchemaError(f"misaligned records: observation t={observation.t}, forecast t={forecast.t}")
    t = observation.t
    expected = None if state.t_start is None else state.t_start + state.steps
    if expected is not None and t != expected:
        direction = "regression" if t <= state.t_current else "gap"
        raise SchemaError(f"time {direction}: expected t={expected}, got t={t}")
    if observation.y.shape[0] != cfg.K:
        raise SchemaError(
            f"observation carries {observation.y.shape[0]} institutions, expected {cfg.K}"
        )

    # Same evidence computation as the offline panel builder (single-day panel).
    panel = build_indicator_panel([observation], [forecast], cfg.measure, cfg.levels)
    if state.t_start is None:
        state.t_start = t
    col = state.steps
    state.var_buf[:, col] = panel.i_var[:, 0]
    state.sys_buf[:, col] = panel.evidence[:, 0]
    state.steps += 1

    if state.steps < cfg.m:
        return StepOutcome(t=t, emitted=False, normalized=None, alarms=())

    values = _window_values(state)
    thresholds = np.empty_like(values)
    thresholds[: state.n_var_streams] = state.cv.v
    thresholds[state.n_var_streams :] = state.cv.c
    normalized = values / thresholds
    state.raw_rows.append(values)
    state.norm_rows.append(normalized)

    crossing, best = _best_crossing(normalized)
    new_alarms: list[AlarmRecord] = []
    if crossing.size:
        flag_idx = None
        if not state.first_seen:
            flag_idx = best
            state.first_seen = True
        for idx in crossing:
            kind, institution = _stream_identity(state, int(idx))
            rec = AlarmRecord(
                T=t,
                kind=kind,
                institution=institution,
                normalized_value=float(normalized[idx]),
                first=(flag_idx is not None and int(idx) == flag_idx),
            )
            state.alarms.append(rec)
            new_alarms.append(rec)
    return StepOutcome(t=t, emitted=True, normalized=normalized, alarms=tuple(new_alarms))


def monitor_finalize(state: MonitorState) -> MonitorReport:
    """Assemble the report; requires at least one emitted time point."""
    cfg = state.config
    if not state.norm_rows:
        raise SchemaError(
            f"nothing to report: {state.steps} steps consumed but the window "
            f"needs {cfg.m} before any detector value is emitted"
        )
    n_var = state.n_var_streams
    raw = np.stack(state.raw_rows, axis=1)  # (streams, n_T)
    norm = np.stack(state.norm_rows, axis=1)
    t_final = state.t_current
    T = np.arange(state.t_start + cfg.m - 1, t_final + 1)
    first = next((a for a in state.alarms if a.first), None)
    return MonitorReport(
        config=cfg,
        horizon=state.cv.n,
        t_start=state.t_start,
        t_final=t_final,
        T=T,
        raw_var=raw[:n_var],
        raw_sys=raw[n_var:],
        norm_var=norm[:n_var],
        norm_sys=norm[n_var:],
        alarms=tuple(state.alarms),
        first_alarm=first,
    )


def run_monitor(
    config: MonitorConfig,
    cv: CriticalValues,
    observations,
    forecasts,
) -> MonitorReport:
    """Batch monitoring of a whole aligned panel.

    Produces the report the step machine would produce (the equivalence is a
    tested invariant) but computes the trace with the compiled whole-panel
    scan, which is what makes large replication studies affordable.
    """
    state = monitor_init(config, cv)  # validates config/cv compatibility
    panel = build_indicator_panel(observations, forecasts, config.measure, config.levels)
    if panel.k != config.K:
        raise SchemaError(f"panel carries {panel.k} institutions, expected {config.K}")
    if panel.n > cv.n:
        raise SchemaError(
            f"monitoring horizon exhausted: the critical values cover {cv.n} "
            f"steps but the panel has {panel.n}"
        )
    if panel.n < config.m:
        raise SchemaError(
            f"nothing to report: {panel.n} steps consumed but the window "
            f"needs {config.m} before any detector value is emitted"
        )
    return report_from_panel(state, panel)


def report_from_panel(state: MonitorState, panel: IndicatorPanel) -> MonitorReport:
    """Finish a batch run from an already-built evidence panel."""
    cfg = state.config
    cv = state.cv
    trace = detector_trace(panel, m=cfg.m, a=cfg.a, moments=cv.moments)
    norm_var = trace.var_det / cv.v
    norm_sys = trace.sys_det / cv.c
    alarms, first = scan_alarms(norm_var, norm_sys, trace.T)
    return MonitorReport(
        config=cfg,
        horizon=cv.n,
        t_start=int(panel.t0),
        t_final=int(panel.t0) + panel.n - 1,
        T=trace.T,
        raw_var=trace.var_det,
        raw_sys=trace.sys_det,
        norm_var=norm_var,
        norm_sys=norm_sys,
        alarms=alarms,
        first_alarm=first,
    )
