"""Replication studies: simulate, forecast, calibrate, monitor, aggregate.

Each study cell fixes (measure, levels, K, t_star, beta_post), calibrates
critical values once (cached across cells that share a design), and runs
independent replications of the full pipeline: DCC panel -> true-parameter
forecasts -> evidence panel -> normalized detector trace -> first alarm.
Aggregates are joint first-rejection rates and the first-alarm attribution
split between the VaR detector(s) and the K systemic detectors.

Replications use a vectorized evidence assembly that is value-identical to
the record-based panel builder (a tested invariant), which is what makes
thousand-replication cells run in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .core_series import IndicatorPanel, MeasureKind, RiskLevels
from .detectors import DEFAULT_WEIGHT, detector_trace
from .dgp import BreakSpec, DccParams, baseline_params, forecast_arrays, simulate_dcc
from .errors import ConfigError, SchemaError
from .monitor import first_alarm_from_trace
from .nullsim import (
    CriticalValues,
    NullMoments,
    SupSamples,
    calibrate_for_measure,
    estimate_null_moments,
    sup_detector_samples,
)
from .seeding import STAGE_STUDY, spawn_rng

__all__ = [
    "StudyPreset",
    "StudyCell",
    "CellResult",
    "make_preset",
    "preset_cells",
    "scale_preset",
    "levels_for",
    "evidence_arrays",
    "run_replication",
    "run_cell",
    "run_study",
    "results_to_csv",
    "PRESET_NAMES",
]

PRESET_NAMES = ("size_table", "power_break", "power_magnitude", "first_alarm")

_PRE_BREAK_BETA = 0.7  # persistence of the baseline generator


def levels_for(measure: MeasureKind, level: float) -> RiskLevels:
    """Both risk levels from one probability: alpha = beta = level,
    except MES which pins alpha = 0."""
    if measure is MeasureKind.MES:
        return RiskLevels(alpha=0.0, beta=level)
    return RiskLevels(alpha=level, beta=level)


@dataclass(frozen=True)
class StudyPreset:
    """One study design: grids, replication counts, calibration budget."""

    name: str
    measure: MeasureKind
    k_grid: tuple[int, ...]
    level_grid: tuple[float, ...]
    n: int
    m: int
    t_star_grid: tuple[int, ...]
    beta_post_grid: tuple[float, ...]
    reps: int
    calib_reps: int
    moment_reps: int
    iota: float
    a: float
    seed: int

    def __post_init__(self) -> None:
        if self.name not in PRESET_NAMES:
            raise ConfigError(
                f"unknown preset {self.name!r}; expected one of {PRESET_NAMES}"
            )
        for grid_name in ("k_grid", "level_grid", "t_star_grid", "beta_post_grid"):
            if len(getattr(self, grid_name)) == 0:
                raise ConfigError(f"{grid_name} must be non-empty")
        if self.reps < 100:
            raise ConfigError(f"replication count must be at least 100, got {self.reps}")
        if not (0.0 < self.iota < 1.0):
            raise ConfigError(f"iota must lie in (0, 1), got {self.iota}")
        if any(k < 1 for k in self.k_grid):
            raise ConfigError("k_grid entries must be positive")
        if any(t < 0 or t > self.n for t in self.t_star_grid):
            raise ConfigError(f"t_star_grid entries must lie in [0, {self.n}]")


@dataclass(frozen=True)
class StudyCell:
    """One point of a study grid."""

    measure: MeasureKind
    levels: RiskLevels
    K: int
    t_star: int
    beta_post: float


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcomes of one cell's replications (rates in percent)."""

    cell: StudyCell
    n: int
    m: int
    reps: int
    iota: float
    nu: float
    v: float
    c: float
    achieved: float
    joint_pct: float
    var_first_pct: float
    sys_first_pct: float
    sys_first_by_k_pct: tuple[float, ...]


def make_preset(name: str, measure: MeasureKind | str = MeasureKind.COVAR, seed: int = 0) -> StudyPreset:
    """Full-scale preset for one study design.

    ``size_table`` reproduces the no-break rejection-rate tables;
    ``power_break`` sweeps the break point at beta_post = 0.85;
    ``power_magnitude`` sweeps the post-break persistence at t_star = 0;
    ``first_alarm`` is the no-break design focused on attribution balance.
    At full scale these are hours of compute; shrink with ``scale_preset``.
    """
    measure = MeasureKind(measure)
    n, m = 1000, 250
    common = dict(
        measure=measure, n=n, m=m, reps=5000, calib_reps=10_000,
        moment_reps=100_000, iota=0.1, a=DEFAULT_WEIGHT, seed=seed,
    )
    k_grid = (2, 5, 10) if measure is MeasureKind.RCOVAR else (1, 2, 5, 10)
    if name == "size_table":
        return StudyPreset(
            name=name, k_grid=k_grid, level_grid=(0.9, 0.95),
            t_star_grid=(n,), beta_post_grid=(_PRE_BREAK_BETA,), **common,
        )
    if name == "power_break":
        return StudyPreset(
            name=name, k_grid=k_grid, level_grid=(0.9, 0.95),
            t_star_grid=tuple(range(0, n + 1, 50)), beta_post_grid=(0.85,), **common,
        )
    if name == "power_magnitude":
        return StudyPreset(
            name=name, k_grid=k_grid, level_grid=(0.9, 0.95),
            t_star_grid=(0,),
            beta_post_grid=(0.7, 0.75, 0.8, 0.85, 0.87, 0.89, 0.899), **common,
        )
    if name == "first_alarm":
        return StudyPreset(
            name=name, k_grid=(5,), level_grid=(0.9,),
            t_star_grid=(n,), beta_post_grid=(_PRE_BREAK_BETA,), **common,
        )
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def scale_preset(preset: StudyPreset, scale: float) -> StudyPreset:
    """Shrink replication counts by ``scale``; grids, n, and m are untouched.

    The study replication count never drops below 100 and the calibration
    budget never below 1000, so scaled runs stay statistically meaningful.
    """
    if not (0.0 < scale <= 1.0):
        raise ConfigError(f"scale must lie in (0, 1], got {scale}")
    if scale == 1.0:
        return preset
    return replace(
        preset,
        reps=max(100, round(preset.reps * scale)),
        calib_reps=max(1000, round(preset.calib_reps * scale)),
        moment_reps=max(10_000, round(preset.moment_reps * scale)),
    )


def preset_cells(preset: StudyPreset) -> list[StudyCell]:
    """Expand a preset's grids into the ordered list of cells."""
    cells = []
    for level in preset.level_grid:
        levels = levels_for(preset.measure, level)
        for k in preset.k_grid:
            for t_star in preset.t_star_grid:
                for beta_post in preset.beta_post_grid:
                    cells.append(
                        StudyCell(
                            measure=preset.measure, levels=levels, K=k,
                            t_star=t_star, beta_post=beta_post,
                        )
                    )
    return cells


def evidence_arrays(
    w: np.ndarray, forecasts: dict[str, np.ndarray], measure: MeasureKind, levels: RiskLevels
) -> tuple[np.ndarray, np.ndarray]:
    """(i_var, evidence) streams from a loss panel and forecast arrays.

    Vectorized mirror of the record-based panel builder: strict-> violation
    indicators, and for PIT measures the cumulative violation value
    1{pit_x > beta, pit_tail > alpha} * (pit_tail - alpha)/(1 - alpha).
    """
    x = w[:, 0]
    y = w[:, 1:]
    alpha = levels.alpha
    if measure.pit_based:
        pit_x = forecasts["pit_x"]
        pit_tail = forecasts["pit_tail"]
        i_var = (pit_x > levels.beta).astype(np.float64)[None, :]
        mask = (pit_x > levels.beta)[:, None] & (pit_tail > alpha)
        evidence = np.where(mask, (pit_tail - alpha) / (1.0 - alpha), 0.0).T
        return i_var, evidence
    if measure is MeasureKind.COVAR:
        var_hat = forecasts["var_hat"]
        sys_hat = forecasts["sys_hat"]
        hit_x = x > var_hat
        i_var = hit_x.astype(np.float64)[None, :]
        evidence = (hit_x[:, None] & (y > sys_hat)).astype(np.float64).T
        return i_var, evidence
    var_hat = forecasts["var_hat"]  # (n, K) per-institution VaR thresholds
    sys_hat = forecasts["sys_hat"]  # (n, K) market thresholds given each institution
    hit_k = y > var_hat
    i_var = hit_k.astype(np.float64).T
    evidence = (hit_k & (x[:, None] > sys_hat)).astype(np.float64).T
    return i_var, evidence


def run_replication(
    params: DccParams,
    break_spec: BreakSpec | None,
    cv: CriticalValues,
    rng: np.random.Generator,
):
    """One simulate -> forecast -> monitor pass; returns the first alarm or None.

    Simulation runs without burn-in so the forecaster's recursion state
    coincides exactly with the generator's and the forecasts are exactly the
    true conditional risk measures (no initialization transient under the
    null).
    """
    sim = simulate_dcc(params, break_spec, cv.n, burnin=0, rng=rng)
    forecasts = forecast_arrays(params, sim.w, cv.measure, cv.levels)
    i_var, evidence = evidence_arrays(sim.w, forecasts, cv.measure, cv.levels)
    panel = IndicatorPanel(measure=cv.measure, levels=cv.levels, i_var=i_var, evidence=evidence)
    trace = detector_trace(panel, m=cv.m, a=cv.a, moments=cv.moments)
    return first_alarm_from_trace(trace.var_det / cv.v, trace.sys_det / cv.c, trace.T)


def run_cell(
    cell: StudyCell,
    cv: CriticalValues,
    reps: int,
    seed: int,
    cell_index: int,
    progress: Callable[[int], None] | None = None,
) -> CellResult:
    """All replications of one cell, aggregated.

    Replication r draws from the stream keyed (study stage, cell_index, r),
    so cells and replications are independent and any execution order yields
    identical results.
    """
    params = baseline_params(cell.K)
    break_spec = (
        None
        if cell.t_star >= cv.n or cell.beta_post == _PRE_BREAK_BETA
        else BreakSpec(t_star=cell.t_star, beta_post=cell.beta_post)
    )
    joint = 0
    var_first = 0
    sys_first_k = np.zeros(cell.K, dtype=np.int64)
    for r in range(reps):
        rng = spawn_rng(seed, STAGE_STUDY, cell_index, r)
        first = run_replication(params, break_spec, cv, rng)
        if first is not None:
            joint += 1
            if first.kind == "var":
                var_first += 1
            else:
                sys_first_k[first.institution - 1] += 1
        if progress is not None:
            progress(r + 1)
    pct = 100.0 / reps
    return CellResult(
        cell=cell,
        n=cv.n,
        m=cv.m,
        reps=reps,
        iota=cv.iota,
        nu=cv.nu,
        v=cv.v,
        c=cv.c,
        achieved=cv.achieved,
        joint_pct=joint * pct,
        var_first_pct=var_first * pct,
        sys_first_pct=float(sys_first_k.sum()) * pct,
        sys_first_by_k_pct=tuple(float(s) * pct for s in sys_first_k),
    )


class CalibrationCache:
    """Memoized moments, sup samples, and critical values for study runs.

    Null moments and sup samples depend only on (measure, levels, n, m, a)
    plus the budgets, never on K or the break design, so one calibration
    serves every cell that shares the monitoring design.
    """

    def __init__(self, n: int, m: int, a: float, calib_reps: int, moment_reps: int, seed: int):
        self.n, self.m, self.a = n, m, a
        self.calib_reps, self.moment_reps, self.seed = calib_reps, moment_reps, seed
        self._moments: dict[tuple, NullMoments] = {}
        self._sups: dict[tuple, SupSamples] = {}
        self._cv: dict[tuple, CriticalValues] = {}

    def moments(self, measure: MeasureKind, levels: RiskLevels) -> NullMoments:
        key = (measure, levels)
        if key not in self._moments:
            self._moments[key] = estimate_null_moments(
                measure, levels, self.m, a_config=self.a, b0=self.moment_reps, seed=self.seed
            )
        return self._moments[key]

    def sups(self, measure: MeasureKind, levels: RiskLevels) -> SupSamples:
        key = (measure, levels)
        if key not in self._sups:
            self._sups[key] = sup_detector_samples(
                measure, levels, self.n, self.m, self.a,
                self.moments(measure, levels), self.calib_reps, self.seed,
            )
        return self._sups[key]

    def critical_values(self, measure: MeasureKind, levels: RiskLevels, K: int, iota: float) -> CriticalValues:
        key = (measure, levels, K, iota)
        if key not in self._cv:
            self._cv[key] = calibrate_for_measure(self.sups(measure, levels), K, iota)
        return self._cv[key]


def run_study(
    preset: StudyPreset,
    progress: Callable[[str], None] | None = None,
) -> list[CellResult]:
    """Run every cell of a preset and return the aggregated results table."""
    cache = CalibrationCache(
        n=preset.n, m=preset.m, a=preset.a,
        calib_reps=preset.calib_reps, moment_reps=preset.moment_reps, seed=preset.seed,
    )
    cells = preset_cells(preset)
    results = []
    for idx, cell in enumerate(cells):
        cv = cache.critical_values(cell.measure, cell.levels, cell.K, preset.iota)
        result = run_cell(cell, cv, preset.reps, preset.seed, idx)
        results.append(result)
        if progress is not None:
            progress(
                f"[{idx + 1}/{len(cells)}] {cell.measure.value} K={cell.K} "
                f"beta={cell.levels.beta} t*={cell.t_star} beta_post={cell.beta_post}: "
                f"joint {result.joint_pct:.2f}% "
                f"(var-first {result.var_first_pct:.2f}%, sys-first {result.sys_first_pct:.2f}%)"
            )
    return results


def results_to_csv(results: Iterable[CellResult]) -> str:
    """Results table as CSV text (one row per cell, header mandatory)."""
    header = (
        "measure,alpha,beta,K,n,m,t_star,beta_post,reps,iota,nu,v,c,achieved,"
        "joint_pct,var_first_pct,sys_first_pct,sys_first_by_k_pct"
    )
    lines = [header]
    for r in results:
        c = r.cell
        split = ";".join(repr(v) for v in r.sys_first_by_k_pct)
        lines.append(
            ",".join(
                [
                    c.measure.value,
                    repr(c.levels.alpha),
                    repr(c.levels.beta),
                    str(c.K),
                    str(r.n),
                    str(r.m),
                    str(c.t_star),
                    repr(c.beta_post),
                    str(r.reps),
                    repr(r.iota),
                    repr(r.nu),
                    repr(r.v),
                    repr(r.c),
                    repr(r.achieved),
                    repr(r.joint_pct),
                    repr(r.var_first_pct),
                    repr(r.sys_first_pct),
                    split,
                ]
            )
        )
    return "\n".join(lines) + "\n"
