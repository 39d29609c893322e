"""Command-line surface: calibration, monitoring, simulation, and studies.

Subcommands
-----------
critical-values
    Monte Carlo calibration of time-uniform critical values; writes a JSON
    document with full provenance.
monitor
    Run a returns/forecasts CSV pair against calibrated critical values;
    writes the normalized detector trace (CSV) and the alarm log (JSON).
simulate-and-forecast
    Generate a DCC-GARCH loss panel (optionally with a persistence break)
    and the aligned true-parameter forecasts, ready for ``monitor``.
study
    Replication studies over parameter grids (size tables, power curves,
    first-alarm attribution); writes an aggregated results CSV.

Every command is deterministic under a fixed --seed (byte-identical output
files).  Exit codes: 0 success, 2 input/schema error, 3 infeasible
calibration, 4 numerical failure.  The environment variable
RISK_SENTINEL_THREADS caps the compiled kernels' thread pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from .core_series import ForecastRecord, MeasureKind, ObservationRecord, RiskLevels
from .dgp import BreakSpec, DccParams, baseline_params, forecast_arrays, simulate_dcc
from .errors import RiskSentinelError, SchemaError
from .monitor import MonitorConfig, MonitorReport, run_monitor
from .nullsim import (
    CriticalValues,
    calibrate_for_measure,
    estimate_null_moments,
    sup_detector_samples,
)
from .seeding import STAGE_DGP, spawn_rng
from .studies import (
    PRESET_NAMES,
    make_preset,
    results_to_csv,
    run_study,
    scale_preset,
)

__all__ = [
    "main",
    "cmd_critical_values",
    "cmd_monitor",
    "cmd_simulate_and_forecast",
    "cmd_study",
    "write_returns_csv",
    "read_returns_csv",
    "write_forecasts_csv",
    "read_forecasts_csv",
    "write_trace_csv",
]

_MEASURES = tuple(m.value for m in MeasureKind)


def _fmt(value: float) -> str:
    """Shortest exact decimal form; guarantees write->read->write stability."""
    return repr(float(value))


def _apply_thread_cap() -> None:
    raw = os.environ.get("RISK_SENTINEL_THREADS")
    if raw is None:
        return
    try:
        cap = int(raw)
    except ValueError as exc:
        raise SchemaError(f"RISK_SENTINEL_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise SchemaError(f"RISK_SENTINEL_THREADS must be at least 1, got {cap}")
    try:
        import numba

        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover - numba is a hard dependency
        pass


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


# ---------------------------------------------------------------------------
# CSV schemas


def write_returns_csv(path: str, w: np.ndarray, t0: int = 1) -> None:
    """Loss panel CSV: columns t, x, y1..yK (x is the reference series)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[1] < 2:
        raise SchemaError(f"returns panel must be 2-D with >= 2 columns, got {w.shape}")
    k = w.shape[1] - 1
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"] + [f"y{i + 1}" for i in range(k)])
        for row_idx in range(w.shape[0]):
            writer.writerow([str(t0 + row_idx)] + [_fmt(v) for v in w[row_idx]])


def _read_rows(path: str, what: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{what} file {path} is empty") from None
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {what} file {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{what} file {path} has a header but no data rows")
    return header, rows


def _parse_int(token: str, path: str, line: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-integer time {token!r} on data row {line}") from exc


def _parse_float(token: str, path: str, line: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value {token!r} on data row {line}") from exc


def read_returns_csv(path: str) -> list[ObservationRecord]:
    """Parse a returns CSV into per-day observation records."""
    header, rows = _read_rows(path, "returns")
    k = len(header) - 2
    if k < 1 or header[:2] != ["t", "x"] or header[2:] != [f"y{i + 1}" for i in range(k)]:
        raise SchemaError(
            f"{path}: returns header must be t,x,y1..yK, got {','.join(header)}"
        )
    records = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        t = _parse_int(row[0], path, i)
        x = _parse_float(row[1], path, i)
        y = np.array([_parse_float(tok, path, i) for tok in row[2:]])
        records.append(ObservationRecord(t=t, x=x, y=y))
    return records


def _forecast_header(measure: MeasureKind, k: int) -> list[str]:
    if measure.pit_based:
        return ["t", "pit_x"] + [f"pit_tail_{i + 1}" for i in range(k)]
    if measure is MeasureKind.COVAR:
        return ["t", "var_hat"] + [f"sys_hat_{i + 1}" for i in range(k)]
    return (
        ["t"]
        + [f"var_hat_{i + 1}" for i in range(k)]
        + [f"sys_hat_{i + 1}" for i in range(k)]
    )


def write_forecasts_csv(
    path: str, forecasts: dict[str, np.ndarray], measure: MeasureKind, t0: int = 1
) -> None:
    """Forecast CSV in the measure's schema (threshold or PIT columns)."""
    if measure.pit_based:
        pit_x = np.asarray(forecasts["pit_x"], dtype=float)
        pit_tail = np.asarray(forecasts["pit_tail"], dtype=float)
        n, k = pit_tail.shape
        columns = [pit_x[:, None], pit_tail]
    elif measure is MeasureKind.COVAR:
        var_hat = np.asarray(forecasts["var_hat"], dtype=float)
        sys_hat = np.asarray(forecasts["sys_hat"], dtype=float)
        n, k = sys_hat.shape
        columns = [var_hat[:, None], sys_hat]
    else:
        var_hat = np.asarray(forecasts["var_hat"], dtype=float)
        sys_hat = np.asarray(forecasts["sys_hat"], dtype=float)
        n, k = sys_hat.shape
        columns = [var_hat, sys_hat]
    body = np.concatenate(columns, axis=1)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_forecast_header(measure, k))
        for row_idx in range(n):
            writer.writerow([str(t0 + row_idx)] + [_fmt(v) for v in body[row_idx]])


def read_forecasts_csv(path: str, measure: MeasureKind) -> list[ForecastRecord]:
    """Parse a forecast CSV, validating the header against the measure's schema."""
    header, rows = _read_rows(path, "forecasts")
    if measure.pit_based:
        k = len(header) - 2
    elif measure is MeasureKind.COVAR:
        k = len(header) - 2
    else:
        if (len(header) - 1) % 2 != 0:
            raise SchemaError(f"{path}: rcovar forecast header must carry 2K value columns")
        k = (len(header) - 1) // 2
    if k < 1 or header != _forecast_header(measure, k):
        raise SchemaError(
            f"{path}: forecast header for measure {measure.value} must be "
            f"{','.join(_forecast_header(measure, max(k, 1)))}, got {','.join(header)}"
        )
    records = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        t = _parse_int(row[0], path, i)
        vals = [_parse_float(tok, path, i) for tok in row[1:]]
        if measure.pit_based:
            records.append(
                ForecastRecord(t=t, pit_x=vals[0], pit_tail=np.array(vals[1:]))
            )
        elif measure is MeasureKind.COVAR:
            records.append(
                ForecastRecord(t=t, var_hat=vals[0], sys_hat=np.array(vals[1:]))
            )
        else:
            records.append(
                ForecastRecord(
                    t=t, var_hat=np.array(vals[:k]), sys_hat=np.array(vals[k:])
                )
            )
    return records


def write_trace_csv(path: str, report: MonitorReport) -> None:
    """Normalized detector trace CSV: T, det_var[_k...], det_sys_1..K."""
    n_var = report.norm_var.shape[0]
    k = report.norm_sys.shape[0]
    if n_var == 1:
        var_cols = ["det_var"]
    else:
        var_cols = [f"det_var_{i + 1}" for i in range(n_var)]
    header = ["T"] + var_cols + [f"det_sys_{i + 1}" for i in range(k)]
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for j in range(report.T.size):
            row = [str(int(report.T[j]))]
            row += [_fmt(v) for v in report.norm_var[:, j]]
            row += [_fmt(v) for v in report.norm_sys[:, j]]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_critical_values(args: argparse.Namespace) -> int:
    measure = MeasureKind(args.measure)
    levels = RiskLevels(alpha=args.alpha, beta=args.beta)
    levels.validate_for(measure)
    moments = estimate_null_moments(
        measure, levels, args.m, a_config=args.a_weight, b0=args.moment_reps, seed=args.seed
    )
    sups = sup_detector_samples(
        measure, levels, args.n, args.m, args.a_weight, moments, args.reps, args.seed
    )
    cv = calibrate_for_measure(sups, args.num_series, args.iota)
    _ensure_parent(args.out)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(cv.to_json())
    print(f"v={_fmt(cv.v)} c={_fmt(cv.c)} nu={_fmt(cv.nu)} achieved={_fmt(cv.achieved)}")
    print(f"wrote {args.out}")
    return 0


def _load_cv(path: str) -> CriticalValues:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read critical values file {path}: {exc}") from exc
    return CriticalValues.from_json(text)


def cmd_monitor(args: argparse.Namespace) -> int:
    cv = _load_cv(args.cv)
    observations = read_returns_csv(args.returns)
    k = observations[0].y.shape[0]
    if k != cv.K:
        raise SchemaError(
            f"returns file carries {k} institutions but the critical values "
            f"were calibrated for K={cv.K}"
        )
    forecasts = read_forecasts_csv(args.forecasts, cv.measure)
    config = MonitorConfig(measure=cv.measure, levels=cv.levels, m=cv.m, K=cv.K, a=cv.a)
    report = run_monitor(config, cv, observations, forecasts)
    trace_path = f"{args.out_prefix}trace.csv"
    alarms_path = f"{args.out_prefix}alarms.json"
    write_trace_csv(trace_path, report)
    _ensure_parent(alarms_path)
    with open(alarms_path, "w", encoding="utf-8") as fh:
        fh.write(report.alarms_json())
    if report.first_alarm is None:
        print(f"no alarm over T={int(report.T[0])}..{int(report.T[-1])}")
    else:
        fa = report.first_alarm
        print(
            f"first alarm at T={fa.T}: {fa.stream} "
            f"(normalized value {fa.normalized_value:.4f}); "
            f"{len(report.alarms)} crossing(s) logged"
        )
    print(f"wrote {trace_path} and {alarms_path}")
    return 0


def _load_params(args: argparse.Namespace) -> DccParams:
    if args.params is None:
        return baseline_params(args.num_series, nu=args.nu)
    try:
        with open(args.params, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read parameter file {args.params}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"parameter file {args.params} is not valid JSON: {exc}") from exc
    return DccParams.from_dict(doc)


def cmd_simulate_and_forecast(args: argparse.Namespace) -> int:
    measure = MeasureKind(args.measure)
    levels = RiskLevels(alpha=args.alpha, beta=args.beta)
    levels.validate_for(measure)
    params = _load_params(args)
    if args.break_t is None:
        break_spec = None
    else:
        break_spec = BreakSpec(t_star=args.break_t, beta_post=args.beta_post)
    rng = spawn_rng(args.seed, STAGE_DGP, 0)
    sim = simulate_dcc(params, break_spec, args.n, args.burnin, rng)
    forecasts = forecast_arrays(params, sim.w, measure, levels)
    returns_path = f"{args.out_prefix}returns.csv"
    forecasts_path = f"{args.out_prefix}forecasts.csv"
    write_returns_csv(returns_path, sim.w)
    write_forecasts_csv(forecasts_path, forecasts, measure)
    print(
        f"simulated {sim.n} days x {sim.dim} series "
        f"(break at t*={'none' if break_spec is None else args.break_t})"
    )
    print(f"wrote {returns_path} and {forecasts_path}")
    return 0


def cmd_study(args: argparse.Namespace) -> int:
    preset = make_preset(args.preset, measure=args.measure, seed=args.seed)
    overrides = {}
    if args.k:
        overrides["k_grid"] = tuple(args.k)
    if args.level:
        overrides["level_grid"] = tuple(args.level)
    if args.t_star:
        overrides["t_star_grid"] = tuple(args.t_star)
    if args.beta_post:
        overrides["beta_post_grid"] = tuple(args.beta_post)
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.calib_reps is not None:
        overrides["calib_reps"] = args.calib_reps
    if args.moment_reps is not None:
        overrides["moment_reps"] = args.moment_reps
    if args.iota is not None:
        overrides["iota"] = args.iota
    if overrides:
        preset = replace(preset, **overrides)
    preset = scale_preset(preset, args.scale)
    results = run_study(preset, progress=lambda msg: print(msg, file=sys.stderr))
    text = results_to_csv(results)
    _ensure_parent(args.out)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {args.out} ({len(results)} cell(s), {preset.reps} replication(s) each)")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risk-sentinel",
        description="Sequential surveillance of systemic risk forecasts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cv = sub.add_parser(
        "critical-values", help="calibrate time-uniform critical values by Monte Carlo"
    )
    p_cv.add_argument("--measure", required=True, choices=_MEASURES)
    p_cv.add_argument("--alpha", type=float, required=True)
    p_cv.add_argument("--beta", type=float, required=True)
    p_cv.add_argument("--n", type=int, required=True, help="monitoring horizon")
    p_cv.add_argument("--m", type=int, required=True, help="rolling window length")
    p_cv.add_argument("--num-series", type=int, required=True, help="number of institutions K")
    p_cv.add_argument("--iota", type=float, required=True, help="familywise size budget")
    p_cv.add_argument("--a-weight", type=float, default=0.5, help="detector combination weight")
    p_cv.add_argument("--reps", type=int, required=True, help="calibration replications B")
    p_cv.add_argument("--moment-reps", type=int, default=100_000, help="moment-estimation windows")
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--out", required=True, help="output JSON path")
    p_cv.set_defaults(func=cmd_critical_values)

    p_mon = sub.add_parser("monitor", help="monitor a returns/forecasts panel")
    p_mon.add_argument("--cv", required=True, help="critical values JSON")
    p_mon.add_argument("--returns", required=True, help="returns CSV (t,x,y1..yK)")
    p_mon.add_argument("--forecasts", required=True, help="forecast CSV in the measure's schema")
    p_mon.add_argument("--out-prefix", required=True, help="prefix for trace.csv and alarms.json")
    p_mon.set_defaults(func=cmd_monitor)

    p_sim = sub.add_parser(
        "simulate-and-forecast", help="generate a DCC panel and aligned true-parameter forecasts"
    )
    p_sim.add_argument("--params", default=None, help="DCC parameter JSON (default: baseline)")
    p_sim.add_argument("--num-series", type=int, default=1, help="institutions K for baseline parameters")
    p_sim.add_argument("--nu", type=float, default=5.0, help="degrees of freedom for baseline parameters")
    p_sim.add_argument("--break-t", type=int, default=None, help="persistence break time (default: none)")
    p_sim.add_argument("--beta-post", type=float, default=0.85, help="post-break persistence")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--burnin", type=int, default=500)
    p_sim.add_argument("--measure", required=True, choices=_MEASURES)
    p_sim.add_argument("--alpha", type=float, required=True)
    p_sim.add_argument("--beta", type=float, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out-prefix", required=True)
    p_sim.set_defaults(func=cmd_simulate_and_forecast)

    p_study = sub.add_parser("study", help="run a replication study preset")
    p_study.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p_study.add_argument("--measure", default="covar", choices=_MEASURES)
    p_study.add_argument("--k", type=int, action="append", help="restrict the K grid (repeatable)")
    p_study.add_argument(
        "--level", type=float, action="append", help="restrict the probability-level grid (repeatable)"
    )
    p_study.add_argument(
        "--t-star", type=int, action="append", help="restrict the break-time grid (repeatable)"
    )
    p_study.add_argument(
        "--beta-post", type=float, action="append", help="restrict the post-break persistence grid"
    )
    p_study.add_argument("--reps", type=int, default=None, help="override the replication count")
    p_study.add_argument("--calib-reps", type=int, default=None, help="override the calibration budget")
    p_study.add_argument("--moment-reps", type=int, default=None, help="override the moment budget")
    p_study.add_argument("--iota", type=float, default=None, help="override the size budget")
    p_study.add_argument("--scale", type=float, default=1.0, help="shrink replication counts only")
    p_study.add_argument("--seed", type=int, default=0)
    p_study.add_argument("--out", required=True, help="results CSV path")
    p_study.set_defaults(func=cmd_study)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        return args.func(args)
    except RiskSentinelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
