"""Monitoring state machine: guards, alarm rules, and step/batch equivalence.

The central invariant is that feeding a panel through ``monitor_step`` one
record at a time reproduces the batch ``run_monitor`` output bit for bit —
same detector values, same normalized ratios, same alarm log, same JSON.
Alarm attribution (largest normalized value, ties to the lowest stream
index, var streams before systemic) is pinned down with hand-built traces.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from risk_sentinel.core_series import (
    ForecastRecord,
    MeasureKind,
    ObservationRecord,
    RiskLevels,
    build_indicator_panel,
)
from risk_sentinel.detectors import DetectorTrace, NullMoments, detector_trace
from risk_sentinel.errors import ConfigError, SchemaError
from risk_sentinel.monitor import (
    AlarmRecord,
    MonitorConfig,
    first_alarm_from_trace,
    monitor_finalize,
    monitor_init,
    monitor_step,
    report_from_panel,
    run_monitor,
    scan_alarms,
)
from risk_sentinel.nullsim import CriticalValues, estimate_null_moments

L90 = RiskLevels(alpha=0.9, beta=0.9)
L95 = RiskLevels(alpha=0.95, beta=0.95)
L_MES = RiskLevels(alpha=0.0, beta=0.9)

M = 25


@pytest.fixture(scope="module")
def mom_covar():
    return estimate_null_moments(MeasureKind.COVAR, L90, m=M, b0=10_000, seed=11)


@pytest.fixture(scope="module")
def mom_rcovar():
    return estimate_null_moments(MeasureKind.RCOVAR, L90, m=M, b0=10_000, seed=11)


@pytest.fixture(scope="module")
def mom_coes():
    return estimate_null_moments(MeasureKind.COES, L90, m=M, b0=10_000, seed=11)


@pytest.fixture(scope="module")
def mom_mes():
    return estimate_null_moments(MeasureKind.MES, L_MES, m=M, b0=10_000, seed=11)


def make_cv(measure, levels, moments, *, n=40, m=M, K=2, a=0.5, v=2.0, c=2.0):
    """Hand-assembled critical values with real moments (for unit tests only)."""
    return CriticalValues(
        measure=measure,
        levels=levels,
        n=n,
        m=m,
        K=K,
        iota=0.1,
        a=a,
        v=v,
        c=c,
        nu=0.9,
        achieved=0.05,
        moments=moments,
        b=200,
        seed=0,
    )


def threshold_records(n, K, rng, *, t0=0, per_institution_var=False):
    """Random aligned records for the threshold-evidence measures."""
    obs, fcs = [], []
    for j in range(n):
        x = float(rng.standard_normal())
        y = rng.standard_normal(K)
        if per_institution_var:
            var_hat = rng.uniform(0.4, 1.0, size=K)
        else:
            var_hat = float(rng.uniform(0.4, 1.0))
        sys_hat = rng.uniform(0.4, 1.0, size=K)
        obs.append(ObservationRecord(t=t0 + j, x=x, y=y))
        fcs.append(ForecastRecord(t=t0 + j, var_hat=var_hat, sys_hat=sys_hat))
    return obs, fcs


def pit_records(n, K, rng, *, t0=0):
    """Random aligned records for the value-evidence (PIT) measures."""
    obs, fcs = [], []
    for j in range(n):
        obs.append(
            ObservationRecord(t=t0 + j, x=float(rng.standard_normal()), y=rng.standard_normal(K))
        )
        fcs.append(ForecastRecord(t=t0 + j, pit_x=float(rng.random()), pit_tail=rng.random(K)))
    return obs, fcs


def plain_pair(t, K=2):
    """One quiet (no-violation) record pair at time t."""
    return (
        ObservationRecord(t=t, x=0.0, y=np.zeros(K)),
        ForecastRecord(t=t, var_hat=1.0, sys_hat=np.ones(K)),
    )


class TestMonitorConfig:
    def test_window_too_short(self):
        with pytest.raises(ConfigError, match="window length"):
            MonitorConfig(MeasureKind.COVAR, L90, m=1, K=1)

    def test_needs_an_institution(self):
        with pytest.raises(ConfigError, match="institution"):
            MonitorConfig(MeasureKind.COVAR, L90, m=M, K=0)

    def test_weight_domain(self):
        with pytest.raises(ConfigError, match="weight"):
            MonitorConfig(MeasureKind.COVAR, L90, m=M, K=1, a=1.5)
        with pytest.raises(ConfigError, match="weight"):
            MonitorConfig(MeasureKind.COVAR, L90, m=M, K=1, a=-0.1)
        MonitorConfig(MeasureKind.COVAR, L90, m=M, K=1, a=0.0)
        MonitorConfig(MeasureKind.COVAR, L90, m=M, K=1, a=1.0)

    def test_levels_checked_against_measure(self):
        with pytest.raises(SchemaError):
            MonitorConfig(MeasureKind.MES, L90, m=M, K=1)  # MES needs alpha == 0
        with pytest.raises(SchemaError):
            MonitorConfig(MeasureKind.COVAR, L_MES, m=M, K=1)  # CoVaR needs alpha > 0


class TestAlarmRecord:
    def test_kind_domain(self):
        with pytest.raises(ConfigError, match="alarm kind"):
            AlarmRecord(T=10, kind="warn", institution=1, normalized_value=1.5)

    def test_requires_crossing_value(self):
        with pytest.raises(ConfigError, match="normalized value"):
            AlarmRecord(T=10, kind="sys", institution=1, normalized_value=0.999)

    def test_exact_threshold_is_an_alarm(self):
        rec = AlarmRecord(T=10, kind="var", institution=None, normalized_value=1.0)
        assert rec.normalized_value == 1.0

    def test_stream_names(self):
        assert AlarmRecord(T=1, kind="var", institution=None, normalized_value=1.0).stream == "var"
        assert AlarmRecord(T=1, kind="var", institution=2, normalized_value=1.0).stream == "var_2"
        assert AlarmRecord(T=1, kind="sys", institution=3, normalized_value=1.0).stream == "sys_3"

    def test_as_dict(self):
        rec = AlarmRecord(T=7, kind="sys", institution=1, normalized_value=1.25, first=True)
        d = rec.as_dict()
        assert d == {
            "T": 7,
            "kind": "sys",
            "institution": 1,
            "stream": "sys_1",
            "normalized_value": 1.25,
            "first": True,
        }

    def test_first_defaults_false(self):
        assert AlarmRecord(T=1, kind="var", institution=None, normalized_value=2.0).first is False


class TestMonitorInit:
    def test_all_mismatches_reported_together(self, mom_covar):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, K=2, a=0.5)
        config = MonitorConfig(MeasureKind.COES, L95, m=M + 1, K=3, a=0.25)
        with pytest.raises(ConfigError) as err:
            monitor_init(config, cv)
        msg = str(err.value)
        for fragment in ("measure", "levels", "window m", "panel width K", "detector weight"):
            assert fragment in msg

    def test_moments_for_a_different_design(self):
        other = NullMoments(
            measure=MeasureKind.COVAR,
            m=M + 1,
            levels=L90,
            mean_uc=0.05,
            var_uc=1e-3,
            mean_iid=0.3,
            var_iid=1e-2,
            mean_uc_var=0.08,
            var_uc_var=2e-3,
            mean_iid_var=0.3,
            var_iid_var=1e-2,
            b0=10_000,
        )
        cv = make_cv(MeasureKind.COVAR, L90, other, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        with pytest.raises(ConfigError, match="different design"):
            monitor_init(config, cv)

    def test_thresholds_must_be_positive(self, mom_covar):
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        with pytest.raises(ConfigError, match="positive"):
            monitor_init(config, make_cv(MeasureKind.COVAR, L90, mom_covar, v=0.0))
        with pytest.raises(ConfigError, match="positive"):
            monitor_init(config, make_cv(MeasureKind.COVAR, L90, mom_covar, c=-1.0))

    def test_fresh_state_layout(self, mom_covar, mom_rcovar):
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        state = monitor_init(config, make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2))
        assert state.var_buf.shape == (1, 40)  # pooled VaR stream
        assert state.sys_buf.shape == (2, 40)
        assert state.steps == 0
        assert state.t_start is None
        assert state.t_current is None
        assert state.n_var_streams == 1

        config_r = MonitorConfig(MeasureKind.RCOVAR, L90, m=M, K=3)
        state_r = monitor_init(config_r, make_cv(MeasureKind.RCOVAR, L90, mom_rcovar, n=40, K=3))
        assert state_r.var_buf.shape == (3, 40)  # one VaR stream per institution
        assert state_r.n_var_streams == 3


class TestStepGuards:
    @pytest.fixture()
    def state(self, mom_covar):
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        return monitor_init(config, make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2))

    def test_misaligned_records(self, state):
        ob, _ = plain_pair(5)
        _, fc = plain_pair(6)
        with pytest.raises(SchemaError, match="misaligned records"):
            monitor_step(state, fc, ob)

    def test_time_gap(self, state):
        ob, fc = plain_pair(0)
        monitor_step(state, fc, ob)
        ob2, fc2 = plain_pair(2)
        with pytest.raises(SchemaError, match="time gap: expected t=1, got t=2"):
            monitor_step(state, fc2, ob2)

    def test_time_regression(self, state):
        for t in (0, 1):
            ob, fc = plain_pair(t)
            monitor_step(state, fc, ob)
        ob, fc = plain_pair(1)
        with pytest.raises(SchemaError, match="time regression: expected t=2, got t=1"):
            monitor_step(state, fc, ob)

    def test_observation_width_checked(self, state):
        ob = ObservationRecord(t=0, x=0.0, y=np.zeros(3))
        fc = ForecastRecord(t=0, var_hat=1.0, sys_hat=np.ones(3))
        with pytest.raises(SchemaError, match="carries 3 institutions, expected 2"):
            monitor_step(state, fc, ob)

    def test_horizon_exhausted(self, mom_covar):
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        state = monitor_init(config, make_cv(MeasureKind.COVAR, L90, mom_covar, n=26, K=2))
        for t in range(26):
            ob, fc = plain_pair(t)
            monitor_step(state, fc, ob)
        ob, fc = plain_pair(26)
        with pytest.raises(SchemaError, match="monitoring horizon exhausted"):
            monitor_step(state, fc, ob)

    def test_finalize_needs_a_full_window(self, state):
        for t in range(5):
            ob, fc = plain_pair(t)
            monitor_step(state, fc, ob)
        with pytest.raises(SchemaError, match="nothing to report: 5 steps consumed"):
            monitor_finalize(state)

    def test_outcomes_before_and_at_window_end(self, state):
        for t in range(M - 1):
            ob, fc = plain_pair(t)
            out = monitor_step(state, fc, ob)
            assert out.t == t
            assert out.emitted is False
            assert out.normalized is None
            assert out.alarms == ()
        ob, fc = plain_pair(M - 1)
        out = monitor_step(state, fc, ob)
        assert out.emitted is True
        assert out.normalized.shape == (3,)  # one VaR stream + two systemic
        assert np.all(np.isfinite(out.normalized))

    def test_t_current_tracks_consumption(self, state):
        assert state.t_current is None
        for t in range(3):
            ob, fc = plain_pair(t)
            monitor_step(state, fc, ob)
            assert state.t_current == t


CASES = [
    # (measure, levels, K, v, c, t0, record flavor, rng seed)
    (MeasureKind.COVAR, L90, 2, 2.0, 2.0, 0, "threshold", 101),
    (MeasureKind.RCOVAR, L90, 3, 2.0, 2.0, 100, "threshold", 102),
    (MeasureKind.COES, L90, 2, 1.0, 1.0, 0, "pit", 103),
    (MeasureKind.MES, L_MES, 1, 1.0, 1.0, 7, "pit", 104),
]


class TestStepBatchEquivalence:
    @pytest.mark.parametrize(
        "measure,levels,K,v,c,t0,flavor,seed",
        CASES,
        ids=[c[0].value for c in CASES],
    )
    def test_step_machine_reproduces_batch_run(
        self, measure, levels, K, v, c, t0, flavor, seed, mom_covar, mom_rcovar, mom_coes, mom_mes
    ):
        moments = {
            MeasureKind.COVAR: mom_covar,
            MeasureKind.RCOVAR: mom_rcovar,
            MeasureKind.COES: mom_coes,
            MeasureKind.MES: mom_mes,
        }[measure]
        rng = np.random.default_rng(seed)
        n = 40
        if flavor == "threshold":
            obs, fcs = threshold_records(
                n, K, rng, t0=t0, per_institution_var=(measure is MeasureKind.RCOVAR)
            )
        else:
            obs, fcs = pit_records(n, K, rng, t0=t0)
        cv = make_cv(measure, levels, moments, n=n, K=K, v=v, c=c)
        config = MonitorConfig(measure, levels, m=M, K=K)

        batch = run_monitor(config, cv, obs, fcs)

        state = monitor_init(config, cv)
        outcomes = [monitor_step(state, fc, ob) for ob, fc in zip(obs, fcs)]
        rep = monitor_finalize(state)

        assert np.array_equal(rep.T, batch.T)
        assert rep.t_start == batch.t_start == t0
        assert rep.t_final == batch.t_final == t0 + n - 1
        assert rep.horizon == batch.horizon == n
        # bit-for-bit: same kernels, same scan order, same arithmetic
        assert rep.raw_var.tobytes() == batch.raw_var.tobytes()
        assert rep.raw_sys.tobytes() == batch.raw_sys.tobytes()
        assert rep.norm_var.tobytes() == batch.norm_var.tobytes()
        assert rep.norm_sys.tobytes() == batch.norm_sys.tobytes()
        assert rep.alarms == batch.alarms
        assert rep.first_alarm == batch.first_alarm
        assert rep.alarms_json() == batch.alarms_json()

        # per-step emissions line up with the batch trace column by column
        emitted = [o for o in outcomes if o.emitted]
        assert len(emitted) == n - M + 1
        stacked = np.stack([o.normalized for o in emitted], axis=1)
        full = np.concatenate([batch.norm_var, batch.norm_sys], axis=0)
        assert stacked.tobytes() == full.tobytes()
        # and the stepwise alarm stream concatenates to the full log
        streamed = [a for o in outcomes for a in o.alarms]
        assert tuple(streamed) == batch.alarms

    def test_alarms_actually_fire_in_the_equivalence_panels(self, mom_covar):
        # guard against the equivalence test silently comparing empty logs
        rng = np.random.default_rng(101)  # same records as the covar case above
        obs, fcs = threshold_records(40, 2, rng)
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        rep = run_monitor(config, cv, obs, fcs)
        assert len(rep.alarms) > 0
        assert rep.first_alarm is not None


class TestAttributionRules:
    def test_var_wins_exact_tie_against_systemic(self):
        T = np.array([5, 6])
        norm_var = np.array([[0.5, 1.25]])
        norm_sys = np.array([[0.2, 1.25]])
        alarms, first = scan_alarms(norm_var, norm_sys, T)
        assert first is not None
        assert (first.kind, first.institution, first.T) == ("var", None, 6)
        assert len(alarms) == 2
        assert [a.first for a in alarms] == [True, False]

    def test_largest_value_wins(self):
        T = np.array([3])
        alarms, first = scan_alarms(np.array([[1.1]]), np.array([[1.3]]), T)
        assert (first.kind, first.institution) == ("sys", 1)
        assert first.normalized_value == 1.3
        assert len(alarms) == 2

    def test_tied_institutions_go_to_the_lowest_index(self):
        T = np.array([9])
        alarms, first = scan_alarms(np.array([[0.5]]), np.array([[1.2], [1.2]]), T)
        assert (first.kind, first.institution) == ("sys", 1)
        flagged = [a for a in alarms if a.first]
        assert len(flagged) == 1 and flagged[0].institution == 1

    def test_first_flag_is_never_reassigned(self):
        T = np.array([5, 6])
        alarms, first = scan_alarms(np.array([[1.05, 2.0]]), np.zeros((1, 2)), T)
        assert first.T == 5 and first.normalized_value == 1.05
        assert [a.first for a in alarms] == [True, False]

    def test_quiet_trace(self):
        T = np.array([5, 6])
        alarms, first = scan_alarms(np.full((1, 2), 0.9), np.full((2, 2), 0.9), T)
        assert alarms == () and first is None
        assert first_alarm_from_trace(np.full((1, 2), 0.9), np.full((2, 2), 0.9), T) is None

    def test_exact_threshold_counts(self):
        T = np.array([1])
        alarms, first = scan_alarms(np.array([[1.0]]), np.zeros((1, 1)), T)
        assert len(alarms) == 1 and first.normalized_value == 1.0

    def test_per_institution_var_streams_are_numbered(self):
        T = np.array([2])
        alarms, first = scan_alarms(np.array([[1.2], [0.5]]), np.zeros((2, 1)), T)
        assert (first.kind, first.institution) == ("var", 1)
        _, first_tied = scan_alarms(np.array([[1.2], [1.2]]), np.zeros((2, 1)), T)
        assert (first_tied.kind, first_tied.institution) == ("var", 1)
        _, first_second = scan_alarms(np.array([[0.5], [1.2]]), np.zeros((2, 1)), T)
        assert (first_second.kind, first_second.institution) == ("var", 2)

    def test_first_alarm_shortcut_agrees_with_full_scan(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n_var = int(rng.integers(1, 4))
            K = int(rng.integers(1, 4))
            n_T = int(rng.integers(1, 12))
            norm_var = rng.uniform(0.6, 1.4, size=(n_var, n_T))
            norm_sys = rng.uniform(0.6, 1.4, size=(K, n_T))
            T = np.arange(50, 50 + n_T)
            _, by_scan = scan_alarms(norm_var, norm_sys, T)
            direct = first_alarm_from_trace(norm_var, norm_sys, T)
            assert direct == by_scan


@pytest.fixture(scope="module")
def saturated_report(mom_covar):
    # every day violates both hypotheses, so every window crosses
    n, K = 30, 2
    obs = [ObservationRecord(t=t, x=1.0, y=np.ones(K)) for t in range(n)]
    fcs = [ForecastRecord(t=t, var_hat=-10.0, sys_hat=np.full(K, -10.0)) for t in range(n)]
    cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=n, K=K, v=0.5, c=0.5)
    config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=K)
    return run_monitor(config, cv, obs, fcs)


class TestAlarmLogStructure:
    def test_every_crossing_is_logged(self, saturated_report):
        rep = saturated_report
        norm = np.concatenate([rep.norm_var, rep.norm_sys], axis=0)
        assert np.all(norm >= 1.0)
        assert len(rep.alarms) == norm.shape[0] * norm.shape[1] == 3 * (30 - M + 1)

    def test_exactly_one_first_flag(self, saturated_report):
        flagged = [a for a in saturated_report.alarms if a.first]
        assert len(flagged) == 1
        assert flagged[0] == saturated_report.first_alarm
        assert saturated_report.first_alarm.T == M - 1  # first full window

    def test_first_is_the_largest_at_the_earliest_time(self, saturated_report):
        rep = saturated_report
        norm = np.concatenate([rep.norm_var, rep.norm_sys], axis=0)
        col = norm[:, 0]
        best = int(np.argmax(col))  # argmax takes the lowest index on ties
        assert rep.first_alarm.normalized_value == float(col[best])
        expected_kind = "var" if best == 0 else "sys"
        assert rep.first_alarm.kind == expected_kind

    def test_alarm_values_match_the_trace(self, saturated_report):
        rep = saturated_report
        norm = np.concatenate([rep.norm_var, rep.norm_sys], axis=0)
        t_index = {int(t): j for j, t in enumerate(rep.T)}
        stream_index = {"var": 0, "sys_1": 1, "sys_2": 2}
        for rec in rep.alarms[:9]:
            j = t_index[rec.T]
            assert rec.normalized_value == float(norm[stream_index[rec.stream], j])


class TestBatchGuards:
    def test_panel_longer_than_horizon(self, mom_covar):
        rng = np.random.default_rng(5)
        obs, fcs = threshold_records(41, 2, rng)
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        with pytest.raises(SchemaError, match="monitoring horizon exhausted"):
            run_monitor(config, cv, obs, fcs)

    def test_panel_shorter_than_window(self, mom_covar):
        rng = np.random.default_rng(6)
        obs, fcs = threshold_records(10, 2, rng)
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        with pytest.raises(SchemaError, match="nothing to report"):
            run_monitor(config, cv, obs, fcs)

    def test_panel_width_mismatch(self, mom_covar):
        rng = np.random.default_rng(7)
        obs, fcs = threshold_records(40, 3, rng)
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        with pytest.raises(SchemaError, match="panel carries 3 institutions, expected 2"):
            run_monitor(config, cv, obs, fcs)

    def test_report_from_panel_matches_run_monitor(self, mom_covar):
        rng = np.random.default_rng(8)
        obs, fcs = threshold_records(40, 2, rng)
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
        config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
        batch = run_monitor(config, cv, obs, fcs)
        panel = build_indicator_panel(obs, fcs, config.measure, config.levels)
        direct = report_from_panel(monitor_init(config, cv), panel)
        assert np.array_equal(direct.T, batch.T)
        assert direct.norm_var.tobytes() == batch.norm_var.tobytes()
        assert direct.norm_sys.tobytes() == batch.norm_sys.tobytes()
        assert direct.alarms == batch.alarms


@pytest.fixture(scope="module")
def report(mom_covar):
    rng = np.random.default_rng(9)
    obs, fcs = threshold_records(40, 2, rng, t0=500)
    cv = make_cv(MeasureKind.COVAR, L90, mom_covar, n=40, K=2)
    config = MonitorConfig(MeasureKind.COVAR, L90, m=M, K=2)
    return config, cv, obs, fcs, run_monitor(config, cv, obs, fcs)


class TestReportOutputs:
    def test_raw_trace_matches_offline_detector_trace(self, report, mom_covar):
        config, cv, obs, fcs, rep = report
        trace = rep.raw_trace()
        assert isinstance(trace, DetectorTrace)
        panel = build_indicator_panel(obs, fcs, config.measure, config.levels)
        offline = detector_trace(panel, m=M, a=config.a, moments=mom_covar)
        assert np.array_equal(trace.T, offline.T)
        assert trace.var_det.tobytes() == offline.var_det.tobytes()
        assert trace.sys_det.tobytes() == offline.sys_det.tobytes()

    def test_alarms_json_document(self, report):
        config, cv, obs, fcs, rep = report
        text = rep.alarms_json()
        assert text.endswith("\n")
        doc = json.loads(text)
        assert set(doc) == {
            "measure",
            "alpha",
            "beta",
            "m",
            "K",
            "horizon",
            "t_start",
            "t_final",
            "alarms",
            "first_alarm",
        }
        assert doc["measure"] == "covar"
        assert doc["alpha"] == 0.9 and doc["beta"] == 0.9
        assert doc["m"] == M and doc["K"] == 2
        assert doc["horizon"] == 40
        assert doc["t_start"] == 500 and doc["t_final"] == 539
        assert len(doc["alarms"]) == len(rep.alarms)
        if rep.first_alarm is None:
            assert doc["first_alarm"] is None
        else:
            assert doc["first_alarm"] == rep.first_alarm.as_dict()
        for entry in doc["alarms"]:
            assert set(entry) == {
                "T",
                "kind",
                "institution",
                "stream",
                "normalized_value",
                "first",
            }
        # keys are emitted sorted, so the serialization is canonical
        assert text == json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def test_rerun_is_byte_identical(self, report):
        config, cv, obs, fcs, rep = report
        again = run_monitor(config, cv, obs, fcs)
        assert again.alarms_json() == rep.alarms_json()
        assert again.norm_var.tobytes() == rep.norm_var.tobytes()
        assert again.norm_sys.tobytes() == rep.norm_sys.tobytes()
