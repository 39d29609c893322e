"""Evidence streams: exceedance indicators and cumulative violation values.

This module turns forecasts plus realized losses into the monitored evidence:

* ``CoVaR`` / ``RCoVaR`` — binary indicator streams,
* ``CoES`` / ``MES`` — cumulative violation values in [0, 1] built from
  probability integral transforms (PITs).

Everything downstream (detectors, calibration, monitoring) consumes the
``IndicatorPanel`` built here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SchemaError

__all__ = [
    "MeasureKind",
    "RiskLevels",
    "ObservationRecord",
    "ForecastRecord",
    "IndicatorPanel",
    "var_indicator",
    "joint_indicator",
    "cumulative_violation",
    "identification_value",
    "build_indicator_panel",
]


class MeasureKind(str, enum.Enum):
    """The systemic risk measure being monitored."""

    COVAR = "covar"
    RCOVAR = "rcovar"
    COES = "coes"
    MES = "mes"

    @property
    def binary_evidence(self) -> bool:
        """True when the evidence stream is a 0/1 indicator series."""
        return self in (MeasureKind.COVAR, MeasureKind.RCOVAR)

    @property
    def pit_based(self) -> bool:
        return self in (MeasureKind.COES, MeasureKind.MES)

    def var_stream_count(self, k: int) -> int:
        """Number of monitored VaR hypotheses (K for RCoVaR, else one)."""
        return k if self is MeasureKind.RCOVAR else 1


@dataclass(frozen=True)
class RiskLevels:
    """Risk levels (alpha, beta); both close to one in applications.

    ``alpha`` is the systemic level (CoVaR/CoES quantile level), ``beta`` the
    VaR level.  ``alpha == 0`` is reserved for MES.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha < 1.0):
            raise SchemaError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not (0.0 < self.beta < 1.0):
            raise SchemaError(f"beta must lie in (0, 1), got {self.beta}")

    def validate_for(self, measure: MeasureKind) -> None:
        """Enforce the cross-field rule linking alpha=0 and MES."""
        if measure is MeasureKind.MES and self.alpha != 0.0:
            raise SchemaError("MES requires alpha = 0")
        if measure is not MeasureKind.MES and self.alpha == 0.0:
            raise SchemaError("alpha = 0 is only meaningful for MES")


@dataclass(frozen=True)
class ObservationRecord:
    """Realized losses at one trading day: reference ``x`` and K institutions."""

    t: int
    x: float
    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "y", y)
        if not math.isfinite(self.x) or not np.all(np.isfinite(y)):
            raise SchemaError(f"non-finite loss at t={self.t}")


@dataclass(frozen=True)
class ForecastRecord:
    """One day's forecasts, issued from information up to t-1.

    Threshold mode (CoVaR/RCoVaR) fills ``var_hat`` (scalar for CoVaR, K-vector
    for RCoVaR) and ``sys_hat`` (K-vector).  PIT mode (CoES/MES) fills
    ``pit_x`` and ``pit_tail`` (K-vector) instead.
    """

    t: int
    var_hat: float | np.ndarray | None = None
    sys_hat: np.ndarray | None = None
    pit_x: float | None = None
    pit_tail: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.sys_hat is not None:
            object.__setattr__(self, "sys_hat", np.atleast_1d(np.asarray(self.sys_hat, dtype=float)))
        if self.pit_tail is not None:
            object.__setattr__(self, "pit_tail", np.atleast_1d(np.asarray(self.pit_tail, dtype=float)))
        if self.var_hat is not None and np.ndim(self.var_hat) > 0:
            object.__setattr__(self, "var_hat", np.asarray(self.var_hat, dtype=float))


@dataclass(frozen=True)
class IndicatorPanel:
    """The monitored evidence streams for one data set.

    ``i_var`` holds one row per VaR hypothesis (one for CoVaR/CoES/MES, K for
    RCoVaR); ``evidence`` holds K rows, binary for CoVaR/RCoVaR and in [0, 1]
    for CoES/MES.  Panels are immutable once built.
    """

    measure: MeasureKind
    levels: RiskLevels
    i_var: np.ndarray  # shape (n_var_streams, n)
    evidence: np.ndarray  # shape (K, n)
    t0: int = 1

    def __post_init__(self) -> None:
        for name in ("i_var", "evidence"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.i_var.ndim != 2 or self.evidence.ndim != 2:
            raise SchemaError("panel streams must be 2-D (streams x time)")
        if self.i_var.shape[1] != self.evidence.shape[1]:
            raise SchemaError("i_var and evidence must share the time axis")

    @property
    def n(self) -> int:
        return self.evidence.shape[1]

    @property
    def k(self) -> int:
        return self.evidence.shape[0]


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise SchemaError(f"{name} must be finite, got {value}")


def var_indicator(x: float, var_hat: float) -> int:
    """1 if the realized loss strictly exceeds its VaR forecast, else 0.

    Ties count as non-exceedance (losses are continuously distributed, so the
    boundary carries no probability; the strict convention keeps the code path
    deterministic).
    """
    _require_finite(x=x, var_hat=var_hat)
    return 1 if x > var_hat else 0


def joint_indicator(x: float, y: float, var_hat: float, sys_hat: float) -> int:
    """1 if both the conditioning loss and the institution loss exceed their forecasts.

    For RCoVaR call with roles swapped: ``joint_indicator(y_k, x, var_hat_k,
    rcovar_hat_k)``.
    """
    _require_finite(x=x, y=y, var_hat=var_hat, sys_hat=sys_hat)
    return 1 if (x > var_hat and y > sys_hat) else 0


def cumulative_violation(pit_x: float, pit_tail: float, levels: RiskLevels) -> float:
    """Cumulative CoVaR violation value in [0, 1] from the two PITs.

    Equals ``1{pit_x > beta, pit_tail > alpha} * (pit_tail - alpha)/(1 - alpha)``,
    i.e. the fraction of levels gamma in [alpha, 1) whose CoVaR forecast was
    violated, given a VaR violation.  With alpha = 0 (MES) this reduces to
    ``1{pit_x > beta} * pit_tail``.
    """
    if not (0.0 <= pit_x <= 1.0) or not (0.0 <= pit_tail <= 1.0):
        raise SchemaError(f"PITs must lie in [0, 1], got ({pit_x}, {pit_tail})")
    alpha = levels.alpha
    if pit_x > levels.beta and pit_tail > alpha:
        return (pit_tail - alpha) / (1.0 - alpha)
    return 0.0


def identification_value(
    v: float, c: float, x: float, y: float, levels: RiskLevels
) -> tuple[float, float]:
    """Joint (VaR, CoVaR) identification value at candidate thresholds (v, c).

    Returns ``(1{x <= v} - beta, 1{x > v} * (1{y <= c} - alpha))``; both
    components have conditional mean zero exactly at the true thresholds.
    Used by diagnostic mean-zero tests only.
    """
    _require_finite(v=v, c=c, x=x, y=y)
    first = (1.0 if x <= v else 0.0) - levels.beta
    second = (1.0 if x > v else 0.0) * ((1.0 if y <= c else 0.0) - levels.alpha)
    return first, second


def _check_alignment(
    observations: Sequence[ObservationRecord], forecasts: Sequence[ForecastRecord]
) -> None:
    if len(observations) != len(forecasts):
        raise SchemaError(
            f"got {len(observations)} observations but {len(forecasts)} forecasts"
        )
    if not observations:
        raise SchemaError("empty panel")
    prev_t = None
    for obs, fc in zip(observations, forecasts):
        if obs.t != fc.t:
            raise SchemaError(f"misaligned time grids at t={obs.t} vs t={fc.t}")
        if prev_t is not None and obs.t != prev_t + 1:
            raise SchemaError(f"gap in time grid between t={prev_t} and t={obs.t}")
        prev_t = obs.t


def build_indicator_panel(
    observations: Sequence[ObservationRecord],
    forecasts: Sequence[ForecastRecord],
    measure: MeasureKind,
    levels: RiskLevels,
) -> IndicatorPanel:
    """Assemble the evidence streams for one measure from aligned records.

    CoVaR/RCoVaR consume threshold fields; CoES/MES consume PIT fields.
    Raises :class:`SchemaError` on misaligned grids, K mismatches, or missing
    fields.
    """
    levels.validate_for(measure)
    _check_alignment(observations, forecasts)
    n = len(observations)
    k = observations[0].y.shape[0]
    if k < 1:
        raise SchemaError("panel needs at least one institution series")
    for obs in observations:
        if obs.y.shape[0] != k:
            raise SchemaError(f"K mismatch at t={obs.t}")

    evidence = np.zeros((k, n))
    if measure.pit_based:
        i_var = np.zeros((1, n))
        for j, (obs, fc) in enumerate(zip(observations, forecasts)):
            if fc.pit_x is None or fc.pit_tail is None:
                raise SchemaError(f"{measure.value} requires PIT fields (missing at t={fc.t})")
            if fc.pit_tail.shape[0] != k:
                raise SchemaError(f"pit_tail has wrong K at t={fc.t}")
            if not (0.0 <= fc.pit_x <= 1.0):
                raise SchemaError(f"pit_x out of [0, 1] at t={fc.t}")
            i_var[0, j] = 1.0 if fc.pit_x > levels.beta else 0.0
            for kk in range(k):
                evidence[kk, j] = cumulative_violation(fc.pit_x, float(fc.pit_tail[kk]), levels)
    elif measure is MeasureKind.COVAR:
        i_var = np.zeros((1, n))
        for j, (obs, fc) in enumerate(zip(observations, forecasts)):
            if fc.var_hat is None or fc.sys_hat is None or np.ndim(fc.var_hat) != 0:
                raise SchemaError(f"covar requires scalar var_hat and sys_hat (t={fc.t})")
            if fc.sys_hat.shape[0] != k:
                raise SchemaError(f"sys_hat has wrong K at t={fc.t}")
            i_var[0, j] = var_indicator(obs.x, float(fc.var_hat))
            for kk in range(k):
                evidence[kk, j] = joint_indicator(
                    obs.x, float(obs.y[kk]), float(fc.var_hat), float(fc.sys_hat[kk])
                )
    else:  # RCoVaR: each institution carries its own VaR hypothesis
        i_var = np.zeros((k, n))
        for j, (obs, fc) in enumerate(zip(observations, forecasts)):
            if fc.var_hat is None or np.ndim(fc.var_hat) != 1 or fc.sys_hat is None:
                raise SchemaError(f"rcovar requires vector var_hat and sys_hat (t={fc.t})")
            if fc.var_hat.shape[0] != k or fc.sys_hat.shape[0] != k:
                raise SchemaError(f"forecast vectors have wrong K at t={fc.t}")
            for kk in range(k):
                y_k = float(obs.y[kk])
                i_var[kk, j] = var_indicator(y_k, float(fc.var_hat[kk]))
                evidence[kk, j] = joint_indicator(
                    y_k, obs.x, float(fc.var_hat[kk]), float(fc.sys_hat[kk])
                )

    return IndicatorPanel(
        measure=measure,
        levels=levels,
        i_var=i_var,
        evidence=evidence,
        t0=observations[0].t,
    )
