"""Null-law simulation, moment estimation, and critical-value calibration.

Under a correct forecast model the evidence streams have a known,
parameter-free law: the VaR stream is IID Bernoulli(1-beta), binary systemic
evidence is IID Bernoulli((1-alpha)(1-beta)), and value evidence is IID with
the mixed CDF ``null_cdf_H``.  This module simulates that law to (i) freeze
the standardization moments of every raw statistic and (ii) calibrate
time-uniform critical values (v, c) so that the probability of any false
alarm over the whole horizon is bounded by a chosen level iota.

Calibration draws B paired suprema of the VaR and systemic detectors, then
scans a quantile level nu downward from 1 until a familywise size estimate
(intersection form for the exposure-direction measures, union form for the
reverse direction) drops below iota; the largest feasible nu gives the least
conservative thresholds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .core_series import MeasureKind, RiskLevels
from .detectors import DEFAULT_WEIGHT, NullMoments, kappa2_table
from .errors import CalibrationError, ConfigError, SchemaError
from .seeding import STAGE_MOMENTS, STAGE_SUPS, spawn_rng

__all__ = [
    "SupSamples",
    "CriticalValues",
    "CONVENTIONS",
    "DEFAULT_GRID_STEP",
    "simulate_null_path",
    "estimate_null_moments",
    "sup_detector_samples",
    "threshold_at",
    "calibrate_intersection",
    "calibrate_union",
    "calibrate_for_measure",
]

DEFAULT_GRID_STEP = 5e-4
_MOMENT_CHUNK = 20_000

# Count comparisons such as #{>= q} <= nu*B are exact integer facts wrapped in
# float arithmetic; the epsilons absorb only representation error (e.g.
# 0.5005*2000 landing one ulp above 1001).
_COUNT_EPS = 1e-9
_EST_EPS = 1e-12

CONVENTIONS: Mapping[str, str] = {
    "clustering_few_violations": "statistic is 0 when the window has fewer than two violations",
    "clustering_durations": "first duration measured from the slot before the window; trailing open gap discarded",
    "autocorr_constant_window": "autocorrelations are 0 when the window variance is 0",
    "portmanteau_smoothing": "p = ln(m) (natural log), all lags 1..m-1",
    "distribution_distance": "exact two-sided supremum against the mixed null CDF (atom at 0)",
    "quantile_rule": "smallest sample value q with #{samples >= q}/B <= nu",
    "nu_zero_sentinel": "next representable float above the sample maximum",
    "nu_grid": "descending from 1 in the given step; the largest feasible nu is returned",
    "infeasible_nu": "grid points with nu*B < 1 admit no finite threshold and are skipped",
    "moment_variance": "sample variance with ddof=1",
    "seeding": "SeedSequence(root_seed, spawn_key=(stage, replicate))",
}


@dataclass(frozen=True)
class SupSamples:
    """B paired suprema of the VaR and systemic detectors on null paths.

    Pairing (index b = one simulated path) is required by the intersection
    term of the calibration estimate.  Provenance fields carry everything
    needed to stamp the resulting critical values.
    """

    sup_var: np.ndarray
    sup_sys: np.ndarray
    paired: bool
    measure: MeasureKind
    levels: RiskLevels
    n: int
    m: int
    a: float
    moments: NullMoments
    seed: int

    def __post_init__(self) -> None:
        sv = np.asarray(self.sup_var, dtype=float)
        ss = np.asarray(self.sup_sys, dtype=float)
        object.__setattr__(self, "sup_var", sv)
        object.__setattr__(self, "sup_sys", ss)
        if sv.shape != ss.shape or sv.ndim != 1:
            raise SchemaError("sup_var and sup_sys must be 1-D and equally long")
        if not self.paired:
            raise SchemaError("calibration requires paired supremum samples")

    @property
    def b(self) -> int:
        return self.sup_var.size


@dataclass(frozen=True)
class CriticalValues:
    """Calibrated time-uniform thresholds with full provenance.

    ``v`` applies to every VaR detector, ``c`` to every systemic detector
    (one common quantile level nu across all K institutions); ``achieved`` is
    the in-sample familywise size estimate at nu.
    """

    measure: MeasureKind
    levels: RiskLevels
    n: int
    m: int
    K: int
    iota: float
    a: float
    v: float
    c: float
    nu: float
    achieved: float
    moments: NullMoments
    b: int
    seed: int
    conventions: Mapping[str, str] = field(default_factory=lambda: dict(CONVENTIONS))

    def __post_init__(self) -> None:
        if not (np.isfinite(self.v) and np.isfinite(self.c)):
            raise ConfigError("critical values must be finite")
        if not (0.0 <= self.nu <= 1.0):
            raise ConfigError(f"nu must lie in [0, 1], got {self.nu}")
        if self.achieved > self.iota + _EST_EPS:
            raise ConfigError(
                f"achieved size {self.achieved} exceeds iota={self.iota}; "
                "refuse to construct unsound critical values"
            )

    def to_json(self) -> str:
        doc = {
            "measure": self.measure.value,
            "alpha": self.levels.alpha,
            "beta": self.levels.beta,
            "n": self.n,
            "m": self.m,
            "K": self.K,
            "iota": self.iota,
            "a": self.a,
            "v": self.v,
            "c": self.c,
            "nu": self.nu,
            "achieved": self.achieved,
            "moments": self.moments.as_dict(),
            "b": self.b,
            "seed": self.seed,
            "conventions": dict(self.conventions),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CriticalValues":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"critical-values file is not valid JSON: {exc}") from exc
        try:
            return cls(
                measure=MeasureKind(doc["measure"]),
                levels=RiskLevels(alpha=float(doc["alpha"]), beta=float(doc["beta"])),
                n=int(doc["n"]),
                m=int(doc["m"]),
                K=int(doc["K"]),
                iota=float(doc["iota"]),
                a=float(doc["a"]),
                v=float(doc["v"]),
                c=float(doc["c"]),
                nu=float(doc["nu"]),
                achieved=float(doc["achieved"]),
                moments=NullMoments.from_dict(doc["moments"]),
                b=int(doc["b"]),
                seed=int(doc["seed"]),
                conventions=dict(doc["conventions"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"critical-values file is missing or mistypes a field: {exc}") from exc


def simulate_null_path(
    measure: MeasureKind, levels: RiskLevels, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """One simulated null path of the paired (VaR, systemic) evidence streams.

    Draws two independent uniform series and applies the null construction:
    I* = 1{U1 > beta}; binary evidence 1{U1 > beta, U2 > alpha}; value
    evidence 1{U1 > beta, U2 > alpha} (U2-alpha)/(1-alpha).
    """
    levels.validate_for(measure)
    if n < 1:
        raise SchemaError(f"path length must be positive, got {n}")
    u1 = rng.random(n)
    u2 = rng.random(n)
    alpha, beta = levels.alpha, levels.beta
    hit1 = u1 > beta
    i_var = hit1.astype(np.float64)
    joint = hit1 & (u2 > alpha)
    if measure.binary_evidence:
        evidence = joint.astype(np.float64)
    else:
        evidence = np.where(joint, (u2 - alpha) / (1.0 - alpha), 0.0)
    return i_var, evidence


def estimate_null_moments(
    measure: MeasureKind,
    levels: RiskLevels,
    m: int,
    a_config: float = DEFAULT_WEIGHT,
    b0: int = 100_000,
    seed: int = 0,
) -> NullMoments:
    """Simulate b0 independent null windows and freeze raw-statistic moments.

    Returns means and ddof=1 variances of the raw statistic pairs for both
    the VaR stream and the systemic stream.  ``a_config`` is validated for
    interface symmetry with the detector configuration; the raw moments do
    not depend on it.  Windows are simulated in fixed-size chunks, each chunk
    keyed by (seed, stage, chunk index).
    """
    levels.validate_for(measure)
    if b0 < 10_000:
        raise ConfigError(f"b0 must be at least 10^4, got {b0}")
    if m < 2:
        raise ConfigError(f"window length must be at least 2, got {m}")
    if not (0.0 <= a_config <= 1.0):
        raise ConfigError(f"weight a must lie in [0, 1], got {a_config}")

    alpha, beta = levels.alpha, levels.beta
    uc_var = np.empty(b0)
    iid_var = np.empty(b0)
    uc_sys = np.empty(b0)
    iid_sys = np.empty(b0)
    kap = kappa2_table(m) if measure.pit_based else None

    done = 0
    chunk_idx = 0
    while done < b0:
        size = min(_MOMENT_CHUNK, b0 - done)
        rng = spawn_rng(seed, STAGE_MOMENTS, chunk_idx)
        u1 = rng.random((size, m))
        u2 = rng.random((size, m))
        sl = slice(done, done + size)
        _kernels.binary_null_raws(u1, u2, beta, alpha, False, uc_var[sl], iid_var[sl])
        if measure.binary_evidence:
            _kernels.binary_null_raws(u1, u2, beta, alpha, True, uc_sys[sl], iid_sys[sl])
        else:
            _kernels.pit_null_raws(u1, u2, beta, alpha, kap, uc_sys[sl], iid_sys[sl])
        done += size
        chunk_idx += 1

    moments = NullMoments(
        measure=measure,
        m=m,
        levels=levels,
        mean_uc=float(np.mean(uc_sys)),
        var_uc=float(np.var(uc_sys, ddof=1)),
        mean_iid=float(np.mean(iid_sys)),
        var_iid=float(np.var(iid_sys, ddof=1)),
        mean_uc_var=float(np.mean(uc_var)),
        var_uc_var=float(np.var(uc_var, ddof=1)),
        mean_iid_var=float(np.mean(iid_var)),
        var_iid_var=float(np.var(iid_var, ddof=1)),
        b0=b0,
    )
    return moments


def sup_detector_samples(
    measure: MeasureKind,
    levels: RiskLevels,
    n: int,
    m: int,
    a: float,
    moments: NullMoments,
    B: int,
    seed: int,
) -> SupSamples:
    """B paired suprema over T = m..n of the VaR and systemic detectors.

    Path b is simulated from the stream keyed by (seed, stage, b), so results
    are independent of evaluation order; the detector values go through the
    same compiled kernels as offline traces and live monitoring.
    """
    levels.validate_for(measure)
    if n < m:
        raise SchemaError(f"horizon n={n} is shorter than the window m={m}")
    if B < 1:
        raise SchemaError(f"need at least one replication, got B={B}")
    if not (0.0 <= a <= 1.0):
        raise ConfigError(f"weight a must lie in [0, 1], got {a}")
    if moments.measure is not measure or moments.m != m or moments.levels != levels:
        raise ConfigError("null moments do not match (measure, m, levels)")

    u1 = np.empty((B, n))
    u2 = np.empty((B, n))
    for b in range(B):
        rng = spawn_rng(seed, STAGE_SUPS, b)
        u1[b] = rng.random(n)
        u2[b] = rng.random(n)

    out_var = np.empty(B)
    out_sys = np.empty(B)
    mv = moments.var_vector
    ms = moments.sys_vector
    if measure.binary_evidence:
        _kernels.binary_sup_pairs(u1, u2, m, levels.beta, levels.alpha, mv, ms, a, out_var, out_sys)
    else:
        kap = kappa2_table(m)
        _kernels.pit_sup_pairs(u1, u2, m, levels.beta, levels.alpha, kap, mv, ms, a, out_var, out_sys)

    return SupSamples(
        sup_var=out_var,
        sup_sys=out_sys,
        paired=True,
        measure=measure,
        levels=levels,
        n=n,
        m=m,
        a=a,
        moments=moments,
        seed=seed,
    )


def threshold_at(samples, nu: float) -> float:
    """Smallest sample value q with #{samples >= q}/B <= nu.

    nu=1 returns the sample minimum; nu=0 (or any nu with nu*B < 1) has no
    finite solution and returns the next float above the sample maximum as an
    explicit sentinel.
    """
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    if s.size == 0:
        raise SchemaError("cannot take a threshold of an empty sample set")
    if not (0.0 <= nu <= 1.0):
        raise SchemaError(f"nu must lie in [0, 1], got {nu}")
    B = s.size
    counts = B - np.searchsorted(s, s, side="left")
    feasible = np.nonzero(counts <= nu * B + _COUNT_EPS)[0]
    if feasible.size == 0:
        return float(np.nextafter(s[-1], np.inf))
    return float(s[feasible[0]])


def _calibration_scan(sups: SupSamples, K: int, iota: float, grid_step: float, union: bool):
    if K < 1:
        raise SchemaError(f"K must be at least 1, got {K}")
    if not (0.0 < iota < 1.0):
        raise SchemaError(f"iota must lie in (0, 1), got {iota}")
    if not (0.0 < grid_step <= 1.0):
        raise SchemaError(f"grid step must lie in (0, 1], got {grid_step}")
    sv = np.sort(sups.sup_var)
    ss = np.sort(sups.sup_sys)
    B = sups.b
    for i in range(int(round(1.0 / grid_step)), 0, -1):
        nu = min(i * grid_step, 1.0)
        if nu * B + _COUNT_EPS < 1.0:
            # No finite threshold exists from here down; with both thresholds
            # at the above-maximum sentinel the size estimate is vacuously 0,
            # which must not count as a calibration.
            break
        v = threshold_at(sv, nu)
        c = threshold_at(ss, nu)
        n_v = B - int(np.searchsorted(sv, v, side="left"))
        n_c = B - int(np.searchsorted(ss, c, side="left"))
        if union:
            n_or = int(np.count_nonzero((sups.sup_var >= v) | (sups.sup_sys >= c)))
            est = K * n_or / B
        else:
            n_both = int(np.count_nonzero((sups.sup_var >= v) & (sups.sup_sys >= c)))
            est = n_v / B + K * n_c / B - K * n_both / B
        if est <= iota + _EST_EPS:
            return nu, v, c, est
    raise CalibrationError(
        f"no quantile level meets iota={iota} with B={B} replications and K={K}; "
        "increase the calibration replications (B) or iota"
    )


def _build_cv(sups: SupSamples, K: int, iota: float, nu: float, v: float, c: float, est: float) -> CriticalValues:
    return CriticalValues(
        measure=sups.measure,
        levels=sups.levels,
        n=sups.n,
        m=sups.m,
        K=K,
        iota=iota,
        a=sups.a,
        v=v,
        c=c,
        nu=nu,
        achieved=est,
        moments=sups.moments,
        b=sups.b,
        seed=sups.seed,
    )


def calibrate_intersection(
    sups: SupSamples, K: int, iota: float, grid_step: float = DEFAULT_GRID_STEP
) -> CriticalValues:
    """Calibrate (v, c) by the three-term familywise bound (exposure direction).

    Scans nu downward and returns the largest nu whose estimate
    (1/B) #{sup_var >= v} + (K/B) #{sup_sys >= c} - (K/B) #{both} is <= iota.
    The subtracted intersection term is why the samples must be paired.
    """
    nu, v, c, est = _calibration_scan(sups, K, iota, grid_step, union=False)
    return _build_cv(sups, K, iota, nu, v, c, est)


def calibrate_union(
    sups: SupSamples, K: int, iota: float, grid_step: float = DEFAULT_GRID_STEP
) -> CriticalValues:
    """Calibrate (v, c) by the union bound (reverse direction).

    Returns the largest nu whose estimate (K/B) #{sup_var >= v or sup_sys >= c}
    is <= iota.  Coincides with the intersection form at K=1.
    """
    nu, v, c, est = _calibration_scan(sups, K, iota, grid_step, union=True)
    return _build_cv(sups, K, iota, nu, v, c, est)


def calibrate_for_measure(
    sups: SupSamples, K: int, iota: float, grid_step: float = DEFAULT_GRID_STEP
) -> CriticalValues:
    """Dispatch to the bound matching the measure's conditioning direction."""
    if sups.measure is MeasureKind.RCOVAR:
        return calibrate_union(sups, K, iota, grid_step)
    return calibrate_intersection(sups, K, iota, grid_step)
