"""Study presets, vectorized evidence assembly, and replication plumbing.

The load-bearing test is the value-identity between ``evidence_arrays`` (the
vectorized assembly used inside replication loops) and the record-based
panel builder, checked bit for bit on genuinely simulated panels for every
measure.  Everything else pins preset grids, scaling floors, replication
keying, caching identity, and the CSV table format.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from risk_sentinel.core_series import (
    ForecastRecord,
    MeasureKind,
    ObservationRecord,
    RiskLevels,
    build_indicator_panel,
)
from risk_sentinel.dgp import baseline_params, forecast_arrays, make_forecast_panel, simulate_dcc
from risk_sentinel.errors import ConfigError
from risk_sentinel.monitor import first_alarm_from_trace
from risk_sentinel.nullsim import CriticalValues, estimate_null_moments
from risk_sentinel.seeding import STAGE_STUDY, spawn_rng
from risk_sentinel.studies import (
    PRESET_NAMES,
    CalibrationCache,
    CellResult,
    StudyCell,
    StudyPreset,
    evidence_arrays,
    levels_for,
    make_preset,
    preset_cells,
    results_to_csv,
    run_cell,
    run_replication,
    run_study,
    scale_preset,
)

L90 = RiskLevels(alpha=0.9, beta=0.9)
L_MES = RiskLevels(alpha=0.0, beta=0.9)


@pytest.fixture(scope="module")
def mom_covar_m25():
    return estimate_null_moments(MeasureKind.COVAR, L90, m=25, b0=10_000, seed=11)


def make_cv(measure, levels, moments, *, n=60, m=25, K=1, v=3.0, c=3.0):
    return CriticalValues(
        measure=measure, levels=levels, n=n, m=m, K=K, iota=0.1, a=0.5,
        v=v, c=c, nu=0.9, achieved=0.05, moments=moments, b=200, seed=0,
    )


class TestLevelsFor:
    def test_threshold_measures_share_one_level(self):
        assert levels_for(MeasureKind.COVAR, 0.9) == L90
        assert levels_for(MeasureKind.RCOVAR, 0.95) == RiskLevels(alpha=0.95, beta=0.95)
        assert levels_for(MeasureKind.COES, 0.9) == L90

    def test_mes_pins_alpha_to_zero(self):
        assert levels_for(MeasureKind.MES, 0.9) == L_MES


class TestMakePreset:
    def test_size_table_grids(self):
        p = make_preset("size_table")
        assert p.measure is MeasureKind.COVAR
        assert p.k_grid == (1, 2, 5, 10)
        assert p.level_grid == (0.9, 0.95)
        assert p.t_star_grid == (1000,)  # no break inside the horizon
        assert p.beta_post_grid == (0.7,)
        assert (p.n, p.m) == (1000, 250)
        assert (p.reps, p.calib_reps, p.moment_reps) == (5000, 10_000, 100_000)
        assert p.iota == 0.1

    def test_rcovar_drops_the_single_institution_cell(self):
        assert make_preset("size_table", "rcovar").k_grid == (2, 5, 10)

    def test_power_break_sweeps_the_break_point(self):
        p = make_preset("power_break")
        assert p.t_star_grid == tuple(range(0, 1001, 50))
        assert p.beta_post_grid == (0.85,)

    def test_power_magnitude_sweeps_persistence(self):
        p = make_preset("power_magnitude")
        assert p.t_star_grid == (0,)
        assert p.beta_post_grid[-1] == 0.899
        assert p.beta_post_grid[0] == 0.7

    def test_first_alarm_design(self):
        p = make_preset("first_alarm")
        assert p.k_grid == (5,)
        assert p.level_grid == (0.9,)

    def test_measure_accepts_strings(self):
        assert make_preset("size_table", "mes").measure is MeasureKind.MES

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            make_preset("sized_table")

    def test_all_preset_names_construct(self):
        for name in PRESET_NAMES:
            assert make_preset(name).name == name


class TestScalePreset:
    def test_proportional_shrink(self):
        p = scale_preset(make_preset("size_table"), 0.5)
        assert (p.reps, p.calib_reps, p.moment_reps) == (2500, 5000, 50_000)

    def test_floors(self):
        p = scale_preset(make_preset("size_table"), 1e-9)
        assert (p.reps, p.calib_reps, p.moment_reps) == (100, 1000, 10_000)

    def test_grids_and_design_untouched(self):
        base = make_preset("power_break")
        p = scale_preset(base, 0.01)
        assert p.t_star_grid == base.t_star_grid
        assert p.k_grid == base.k_grid
        assert (p.n, p.m, p.iota, p.a, p.seed) == (base.n, base.m, base.iota, base.a, base.seed)

    def test_identity_scale(self):
        base = make_preset("size_table")
        assert scale_preset(base, 1.0) is base

    def test_scale_domain(self):
        base = make_preset("size_table")
        with pytest.raises(ConfigError, match="scale"):
            scale_preset(base, 0.0)
        with pytest.raises(ConfigError, match="scale"):
            scale_preset(base, 1.5)


class TestStudyPresetValidation:
    def _preset(self, **overrides):
        base = dict(
            name="size_table", measure=MeasureKind.COVAR, k_grid=(1,),
            level_grid=(0.9,), n=100, m=25, t_star_grid=(100,),
            beta_post_grid=(0.7,), reps=100, calib_reps=1000,
            moment_reps=10_000, iota=0.1, a=0.5, seed=0,
        )
        base.update(overrides)
        return StudyPreset(**base)

    def test_valid_baseline(self):
        self._preset()

    def test_name_must_be_known(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            self._preset(name="ad_hoc")

    def test_grids_must_be_nonempty(self):
        for grid in ("k_grid", "level_grid", "t_star_grid", "beta_post_grid"):
            with pytest.raises(ConfigError, match="non-empty"):
                self._preset(**{grid: ()})

    def test_reps_floor(self):
        with pytest.raises(ConfigError, match="at least 100"):
            self._preset(reps=99)

    def test_iota_domain(self):
        with pytest.raises(ConfigError, match="iota"):
            self._preset(iota=0.0)
        with pytest.raises(ConfigError, match="iota"):
            self._preset(iota=1.0)

    def test_k_grid_positive(self):
        with pytest.raises(ConfigError, match="positive"):
            self._preset(k_grid=(1, 0))

    def test_t_star_range(self):
        with pytest.raises(ConfigError, match="t_star_grid"):
            self._preset(t_star_grid=(101,))
        with pytest.raises(ConfigError, match="t_star_grid"):
            self._preset(t_star_grid=(-1,))


class TestPresetCells:
    def test_cell_count_and_order(self):
        cells = preset_cells(make_preset("size_table"))
        assert len(cells) == 2 * 4  # levels x K
        assert [c.levels.beta for c in cells[:4]] == [0.9] * 4
        assert [c.K for c in cells[:4]] == [1, 2, 5, 10]
        assert [c.levels.beta for c in cells[4:]] == [0.95] * 4
        assert all(c.t_star == 1000 and c.beta_post == 0.7 for c in cells)

    def test_power_break_order_sweeps_t_star_fastest_after_k(self):
        p = make_preset("power_break")
        cells = preset_cells(p)
        assert len(cells) == 2 * 4 * 21
        assert [c.t_star for c in cells[:21]] == list(range(0, 1001, 50))
        assert cells[0].K == cells[20].K == 1
        assert cells[21].K == 2

    def test_mes_cells_carry_alpha_zero(self):
        cells = preset_cells(make_preset("size_table", "mes"))
        assert all(c.levels.alpha == 0.0 for c in cells)


@pytest.fixture(scope="module")
def panel_k3():
    params = baseline_params(3)
    sim = simulate_dcc(params, None, 60, burnin=0, rng=np.random.default_rng(42))
    return params, sim


class TestEvidenceArrays:
    """The vectorized assembly must match the record-based builder exactly."""

    @pytest.mark.parametrize(
        "measure", [MeasureKind.COVAR, MeasureKind.RCOVAR, MeasureKind.COES, MeasureKind.MES]
    )
    def test_matches_record_based_builder(self, panel_k3, measure):
        params, sim = panel_k3
        levels = levels_for(measure, 0.9)
        arrays = forecast_arrays(params, sim.w, measure, levels)
        i_var, evidence = evidence_arrays(sim.w, arrays, measure, levels)

        fcs = make_forecast_panel(params, None, sim.w, measure, levels)
        obs = [
            ObservationRecord(t=j + 1, x=float(sim.w[j, 0]), y=sim.w[j, 1:])
            for j in range(sim.w.shape[0])
        ]
        panel = build_indicator_panel(obs, fcs, measure, levels)

        assert i_var.shape == panel.i_var.shape
        assert evidence.shape == panel.evidence.shape
        assert i_var.tobytes() == panel.i_var.tobytes()
        assert evidence.tobytes() == panel.evidence.tobytes()

    def test_hand_checked_covar_panel(self):
        # x violates on days 1 and 3; y2 joins on day 3 only
        w = np.array(
            [
                [0.5, 0.0, 0.0],
                [2.0, 0.2, 3.0],
                [0.1, 0.2, 0.3],
                [1.5, 9.0, -1.0],
            ]
        )
        forecasts = {
            "var_hat": np.array([1.0, 1.0, 1.0, 1.0]),
            "sys_hat": np.full((4, 2), 1.0),
        }
        i_var, evidence = evidence_arrays(w, forecasts, MeasureKind.COVAR, L90)
        assert i_var.tolist() == [[0.0, 1.0, 0.0, 1.0]]
        assert evidence.tolist() == [[0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0]]

    def test_hand_checked_rcovar_roles(self):
        # institutions are the VaR streams; the reference series is the tail event
        w = np.array(
            [
                [2.0, 1.5, 0.0],
                [0.0, 1.5, 1.5],
            ]
        )
        forecasts = {
            "var_hat": np.full((2, 2), 1.0),
            "sys_hat": np.full((2, 2), 1.0),
        }
        i_var, evidence = evidence_arrays(w, forecasts, MeasureKind.RCOVAR, L90)
        assert i_var.tolist() == [[1.0, 1.0], [0.0, 1.0]]
        assert evidence.tolist() == [[1.0, 0.0], [0.0, 0.0]]

    def test_hand_checked_pit_weights(self):
        w = np.zeros((3, 2))  # losses unused by value evidence
        forecasts = {
            "pit_x": np.array([0.95, 0.5, 0.99]),
            "pit_tail": np.array([[0.95], [0.99], [0.2]]),
        }
        i_var, evidence = evidence_arrays(w, forecasts, MeasureKind.COES, L90)
        assert i_var.tolist() == [[1.0, 0.0, 1.0]]
        assert evidence[0, 0] == pytest.approx((0.95 - 0.9) / 0.1)
        assert evidence[0, 1] == 0.0  # no VaR violation, weight suppressed
        assert evidence[0, 2] == 0.0  # tail PIT below alpha


class TestRunCell:
    def test_same_seed_reproduces_exactly(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=1)
        cell = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=60, beta_post=0.7)
        r1 = run_cell(cell, cv, reps=100, seed=21, cell_index=0)
        r2 = run_cell(cell, cv, reps=100, seed=21, cell_index=0)
        assert r1 == r2

    def test_replication_keying_is_by_cell_index_and_rep(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=1)
        cell = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=60, beta_post=0.7)
        result = run_cell(cell, cv, reps=1, seed=21, cell_index=3)
        first = run_replication(
            baseline_params(1), None, cv, spawn_rng(21, STAGE_STUDY, 3, 0)
        )
        if first is None:
            assert result.joint_pct == 0.0
        else:
            assert result.joint_pct == 100.0
            if first.kind == "var":
                assert result.var_first_pct == 100.0
            else:
                assert result.sys_first_by_k_pct[first.institution - 1] == 100.0

    def test_attribution_shares_add_up(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=2, v=1.0, c=1.0)
        cell = StudyCell(MeasureKind.COVAR, L90, K=2, t_star=60, beta_post=0.7)
        r = run_cell(cell, cv, reps=100, seed=4, cell_index=0)
        assert r.joint_pct > 0.0  # low thresholds guarantee frequent alarms
        assert r.joint_pct == pytest.approx(r.var_first_pct + r.sys_first_pct, abs=1e-9)
        assert r.sys_first_pct == pytest.approx(sum(r.sys_first_by_k_pct), abs=1e-9)
        assert len(r.sys_first_by_k_pct) == 2

    def test_break_outside_horizon_equals_no_break(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=1)
        late = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=60, beta_post=0.85)
        baseline_beta = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=20, beta_post=0.7)
        r_late = run_cell(late, cv, reps=100, seed=9, cell_index=0)
        r_base = run_cell(baseline_beta, cv, reps=100, seed=9, cell_index=0)
        assert replace(r_late, cell=baseline_beta) == r_base

    def test_a_real_break_raises_rejections(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=1)
        quiet = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=60, beta_post=0.7)
        broken = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=0, beta_post=0.85)
        r_quiet = run_cell(quiet, cv, reps=100, seed=13, cell_index=0)
        r_broken = run_cell(broken, cv, reps=100, seed=13, cell_index=0)
        assert r_broken.joint_pct > r_quiet.joint_pct + 20.0

    def test_progress_callback_counts_replications(self, mom_covar_m25):
        cv = make_cv(MeasureKind.COVAR, L90, mom_covar_m25, K=1)
        cell = StudyCell(MeasureKind.COVAR, L90, K=1, t_star=60, beta_post=0.7)
        seen = []
        run_cell(cell, cv, reps=100, seed=2, cell_index=0, progress=seen.append)
        assert seen == list(range(1, 101))


@pytest.fixture(scope="module")
def cache():
    return CalibrationCache(n=60, m=25, a=0.5, calib_reps=300, moment_reps=10_000, seed=3)


class TestCalibrationCache:
    def test_moments_memoized(self, cache):
        m1 = cache.moments(MeasureKind.COVAR, L90)
        m2 = cache.moments(MeasureKind.COVAR, L90)
        assert m1 is m2

    def test_sups_memoized_and_shared_across_k(self, cache):
        s1 = cache.sups(MeasureKind.COVAR, L90)
        cv1 = cache.critical_values(MeasureKind.COVAR, L90, K=1, iota=0.1)
        cv2 = cache.critical_values(MeasureKind.COVAR, L90, K=2, iota=0.1)
        s2 = cache.sups(MeasureKind.COVAR, L90)
        assert s1 is s2
        assert cv1 is not cv2
        assert cv1 is cache.critical_values(MeasureKind.COVAR, L90, K=1, iota=0.1)
        assert (cv1.K, cv2.K) == (1, 2)

    def test_critical_values_carry_the_design(self, cache):
        cv = cache.critical_values(MeasureKind.COVAR, L90, K=1, iota=0.1)
        assert cv.measure is MeasureKind.COVAR
        assert cv.levels == L90
        assert (cv.n, cv.m, cv.a) == (60, 25, 0.5)
        assert cv.iota == 0.1
        assert cv.achieved <= 0.1 + 1e-12


class TestRunStudy:
    def test_tiny_study_end_to_end(self):
        preset = StudyPreset(
            name="size_table", measure=MeasureKind.COVAR, k_grid=(1, 2),
            level_grid=(0.9,), n=60, m=25, t_star_grid=(60,),
            beta_post_grid=(0.7,), reps=100, calib_reps=300,
            moment_reps=10_000, iota=0.1, a=0.5, seed=5,
        )
        lines = []
        results = run_study(preset, progress=lines.append)
        assert [r.cell.K for r in results] == [1, 2]
        assert all(r.reps == 100 for r in results)
        # calibrated at iota = 0.1; allow generous Monte Carlo slack
        assert all(0.0 <= r.joint_pct <= 35.0 for r in results)
        assert len(lines) == 2 and lines[0].startswith("[1/2] covar K=1")


class TestResultsCsv:
    def test_frozen_row(self):
        cell = StudyCell(MeasureKind.COVAR, L90, K=2, t_star=1000, beta_post=0.7)
        result = CellResult(
            cell=cell, n=1000, m=250, reps=5000, iota=0.1, nu=0.75, v=3.25,
            c=4.5, achieved=0.0988, joint_pct=10.0, var_first_pct=6.0,
            sys_first_pct=4.0, sys_first_by_k_pct=(2.5, 1.5),
        )
        text = results_to_csv([result])
        lines = text.splitlines()
        assert lines[0] == (
            "measure,alpha,beta,K,n,m,t_star,beta_post,reps,iota,nu,v,c,achieved,"
            "joint_pct,var_first_pct,sys_first_pct,sys_first_by_k_pct"
        )
        assert lines[1] == (
            "covar,0.9,0.9,2,1000,250,1000,0.7,5000,0.1,0.75,3.25,4.5,0.0988,"
            "10.0,6.0,4.0,2.5;1.5"
        )

    def test_one_line_per_result_and_round_trip_floats(self):
        cell = StudyCell(MeasureKind.MES, L_MES, K=1, t_star=0, beta_post=0.85)
        result = CellResult(
            cell=cell, n=1000, m=250, reps=100, iota=0.1, nu=0.123456789012345,
            v=2.0, c=3.0, achieved=0.1, joint_pct=82.0, var_first_pct=50.0,
            sys_first_pct=32.0, sys_first_by_k_pct=(32.0,),
        )
        text = results_to_csv([result, result])
        lines = text.splitlines()
        assert len(lines) == 3
        fields = lines[1].split(",")
        assert fields[0] == "mes"
        assert float(fields[1]) == 0.0
        # repr-based serialization keeps every bit of the float
        assert float(fields[10]) == 0.123456789012345
