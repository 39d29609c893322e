"""Rolling-window statistics and standardized, weighted detector traces.

Four raw window statistics drive the surveillance scheme:

* coverage: absolute deviation of the window violation rate from its target,
* clustering: Gini coefficient of inter-violation durations,
* distribution: exact Kolmogorov-Smirnov distance of violation values to
  their null law,
* autocorrelation: Daniell-kernel-weighted portmanteau statistic.

Each statistic is standardized by simulated null moments and the two
statistics of a stream are combined with weight ``a``.  The same compiled
kernels are used here, in null simulation, and in live monitoring, so all
three paths produce identical floats on identical windows.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _kernels
from .core_series import IndicatorPanel, MeasureKind, RiskLevels
from .errors import ConfigError, SchemaError

__all__ = [
    "NullMoments",
    "DetectorTrace",
    "window_violation_stat",
    "gini_from_window",
    "null_cdf_H",
    "ks_from_window",
    "daniell_kernel",
    "sample_autocorr",
    "hong_from_window",
    "standardize",
    "detector_trace",
    "DEFAULT_WEIGHT",
]

DEFAULT_WEIGHT = 0.5


@dataclass(frozen=True)
class NullMoments:
    """Simulated null means/variances of the raw window statistics.

    ``*_uc``/``*_iid`` refer to the systemic stream's pair of statistics
    (coverage/clustering for binary evidence, distribution/autocorrelation
    for value evidence); the ``*_var`` suffix marks the VaR stream's own
    coverage/clustering moments.  Frozen once per (measure, m, levels).
    """

    measure: MeasureKind
    m: int
    levels: RiskLevels
    mean_uc: float
    var_uc: float
    mean_iid: float
    var_iid: float
    mean_uc_var: float
    var_uc_var: float
    mean_iid_var: float
    var_iid_var: float
    b0: int

    def __post_init__(self) -> None:
        if self.b0 < 10_000:
            raise ConfigError(f"moment replication count must be >= 10^4, got {self.b0}")
        for name in ("var_uc", "var_iid", "var_uc_var", "var_iid_var"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(
                    f"degenerate null moment {name} = {getattr(self, name)}; "
                    "the statistic is constant under these parameters"
                )

    @property
    def sys_vector(self) -> np.ndarray:
        """(mean_uc, var_uc, mean_iid, var_iid) for the systemic stream."""
        return np.array([self.mean_uc, self.var_uc, self.mean_iid, self.var_iid])

    @property
    def var_vector(self) -> np.ndarray:
        """(mean_uc, var_uc, mean_iid, var_iid) for the VaR stream."""
        return np.array(
            [self.mean_uc_var, self.var_uc_var, self.mean_iid_var, self.var_iid_var]
        )

    def as_dict(self) -> dict:
        return {
            "measure": self.measure.value,
            "m": self.m,
            "alpha": self.levels.alpha,
            "beta": self.levels.beta,
            "mean_uc": self.mean_uc,
            "var_uc": self.var_uc,
            "mean_iid": self.mean_iid,
            "var_iid": self.var_iid,
            "mean_uc_var": self.mean_uc_var,
            "var_uc_var": self.var_uc_var,
            "mean_iid_var": self.mean_iid_var,
            "var_iid_var": self.var_iid_var,
            "b0": self.b0,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NullMoments":
        return cls(
            measure=MeasureKind(d["measure"]),
            m=int(d["m"]),
            levels=RiskLevels(alpha=float(d["alpha"]), beta=float(d["beta"])),
            mean_uc=float(d["mean_uc"]),
            var_uc=float(d["var_uc"]),
            mean_iid=float(d["mean_iid"]),
            var_iid=float(d["var_iid"]),
            mean_uc_var=float(d["mean_uc_var"]),
            var_uc_var=float(d["var_uc_var"]),
            mean_iid_var=float(d["mean_iid_var"]),
            var_iid_var=float(d["var_iid_var"]),
            b0=int(d["b0"]),
        )


@dataclass(frozen=True)
class DetectorTrace:
    """Detector values at every monitoring time T = m..n.

    ``var_det`` has one row per VaR hypothesis, ``sys_det`` one row per
    institution; column j corresponds to monitoring time ``T[j]``.
    """

    T: np.ndarray
    var_det: np.ndarray
    sys_det: np.ndarray

    def __post_init__(self) -> None:
        if not (np.all(np.isfinite(self.var_det)) and np.all(np.isfinite(self.sys_det))):
            raise ConfigError("non-finite detector values; check the null moments")


def _as_window(window) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(window, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise SchemaError("window must be a non-empty 1-D series")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("window contains non-finite entries")
    return arr


def window_violation_stat(window, target_rate: float) -> float:
    """Absolute deviation of the window violation rate from ``target_rate``."""
    arr = _as_window(window)
    if not (0.0 < target_rate < 1.0):
        raise SchemaError(f"target_rate must lie in (0, 1), got {target_rate}")
    return float(_kernels.v_stat(arr, 0, arr.size, target_rate))


def gini_from_window(window) -> float:
    """Gini coefficient of inter-violation durations; 0 with fewer than 2 hits.

    The first duration is measured from the slot before the window; the open
    gap after the last violation is discarded.
    """
    arr = _as_window(window)
    dur = np.empty(arr.size, np.int64)
    return float(_kernels.gini_stat(arr, 0, arr.size, dur))


def null_cdf_H(x: float, levels: RiskLevels) -> float:
    """Null distribution function of the violation value at ``x``.

    Piecewise: 0 below the support, ``(x(1-alpha)+alpha)(1-beta)+beta`` on
    [0, 1] (the atom at zero is the value at x=0), 1 above.
    """
    if x < 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return (x * (1.0 - levels.alpha) + levels.alpha) * (1.0 - levels.beta) + levels.beta


def ks_from_window(window, levels: RiskLevels) -> float:
    """Exact sup-distance between the window's empirical CDF and the null law.

    The null CDF is mixed (atom at zero), so the supremum is taken from both
    sides at every distinct sample value; see the kernel for the enumeration.
    """
    arr = _as_window(window)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise SchemaError("violation values must lie in [0, 1]")
    buf = np.empty(arr.size, np.float64)
    return float(_kernels.ks_stat(arr, 0, arr.size, levels.alpha, levels.beta, buf))


def daniell_kernel(z: float) -> float:
    """sin(pi z)/(pi z) with the removable singularity set to 1."""
    if z == 0.0:
        return 1.0
    return math.sin(math.pi * z) / (math.pi * z)


def sample_autocorr(window, lag: int) -> float:
    """Lag-``lag`` autocorrelation about the window mean, m-denominator.

    Returns 0 for a constant window (zero sample variance).
    """
    arr = _as_window(window)
    m = arr.size
    if not (1 <= lag <= m - 1):
        raise SchemaError(f"lag must lie in [1, {m - 1}], got {lag}")
    if np.all(arr == arr[0]):
        # exact constancy check: the float sample variance of a constant
        # window can round away from zero when the constant isn't
        # representable, so testing g0 == 0 alone is not enough
        return 0.0
    acc = 0.0
    for i in range(m):
        acc += arr[i]
    mean = acc / m
    c = [arr[i] - mean for i in range(m)]
    g0 = 0.0
    for t in range(m):
        g0 += c[t] * c[t]
    g0 = g0 / m
    if g0 == 0.0:
        return 0.0
    gj = 0.0
    for t in range(lag, m):
        gj += c[t] * c[t - lag]
    gj = gj / m
    return gj / g0


def hong_from_window(window, p: float) -> float:
    """Weighted sum of squared autocorrelations over all lags 1..m-1.

    Lag j receives weight ``daniell_kernel(j/p)**2``; the detector trace uses
    p = ln(m).
    """
    arr = _as_window(window)
    if not p > 0.0:
        raise SchemaError(f"smoothing parameter must be positive, got {p}")
    m = arr.size
    kappa2 = np.zeros(m)
    for j in range(1, m):
        k = daniell_kernel(j / p)
        kappa2[j] = k * k
    cbuf = np.empty(m, np.float64)
    return float(_kernels.hong_stat(arr, 0, m, kappa2, cbuf))


def standardize(raw: float, mean: float, variance: float) -> float:
    """(raw - mean)/sqrt(variance)."""
    if not variance > 0.0:
        raise ConfigError(f"variance must be positive, got {variance}")
    return (raw - mean) / math.sqrt(variance)


@functools.lru_cache(maxsize=32)
def kappa2_table(m: int) -> np.ndarray:
    """Squared Daniell weights at lags 0..m-1 for smoothing parameter ln(m)."""
    tab = np.zeros(m)
    pm = math.log(m)
    for j in range(1, m):
        k = daniell_kernel(j / pm)
        tab[j] = k * k
    tab.setflags(write=False)
    return tab


def detector_trace(
    panel: IndicatorPanel,
    m: int,
    a: float = DEFAULT_WEIGHT,
    moments: NullMoments | None = None,
) -> DetectorTrace:
    """Standardized, a-weighted detector values for every window end T = m..n.

    The VaR stream(s) always combine the coverage and clustering statistics;
    systemic streams combine coverage/clustering for binary evidence and
    distribution/autocorrelation (smoothing p = ln m) for value evidence.
    """
    if moments is None:
        raise ConfigError("detector_trace requires frozen null moments")
    if not (0.0 <= a <= 1.0):
        raise ConfigError(f"weight a must lie in [0, 1], got {a}")
    if panel.n < m:
        raise SchemaError(f"panel length {panel.n} is shorter than the window m={m}")
    if (
        moments.measure is not panel.measure
        or moments.m != m
        or moments.levels != panel.levels
    ):
        raise ConfigError(
            "null moments were simulated for "
            f"({moments.measure.value}, m={moments.m}, alpha={moments.levels.alpha}, "
            f"beta={moments.levels.beta}) but the panel needs "
            f"({panel.measure.value}, m={m}, alpha={panel.levels.alpha}, "
            f"beta={panel.levels.beta})"
        )

    alpha, beta = panel.levels.alpha, panel.levels.beta
    n_out = panel.n - m + 1
    mv = moments.var_vector
    ms = moments.sys_vector

    var_det = np.empty((panel.i_var.shape[0], n_out))
    target_var = 1.0 - beta
    for i in range(panel.i_var.shape[0]):
        _kernels.trace_binary_stream(
            panel.i_var[i], m, target_var, mv[0], mv[1], mv[2], mv[3], a, var_det[i]
        )

    sys_det = np.empty((panel.k, n_out))
    if panel.measure.binary_evidence:
        target_sys = (1.0 - alpha) * (1.0 - beta)
        for k in range(panel.k):
            _kernels.trace_binary_stream(
                panel.evidence[k], m, target_sys, ms[0], ms[1], ms[2], ms[3], a, sys_det[k]
            )
    else:
        kap = kappa2_table(m)
        for k in range(panel.k):
            _kernels.trace_pit_stream(
                panel.evidence[k], m, alpha, beta, kap, ms[0], ms[1], ms[2], ms[3], a, sys_det[k]
            )

    T = np.arange(panel.t0 + m - 1, panel.t0 + panel.n)
    return DetectorTrace(T=T, var_det=var_det, sys_det=sys_det)
