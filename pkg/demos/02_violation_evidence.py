"""
From forecasts to violation evidence
====================================

Surveillance never sees raw losses directly: each day is reduced to a
violation indicator for the reference series and, per institution, an
evidence value for the tail-risk forecast.  When the forecasts are correct,
those streams have fully known laws — a VaR hit fires with probability
1 - beta, joint tail hits fire with (1 - alpha)(1 - beta), and the
cumulative violation value has mean (1 - alpha)(1 - beta) / 2.
"""

import numpy as np

from risk_sentinel.core_series import (
    MeasureKind,
    ObservationRecord,
    RiskLevels,
    build_indicator_panel,
)
from risk_sentinel.dgp import baseline_params, make_forecast_panel, simulate_dcc
from risk_sentinel.seeding import STAGE_DEMO, spawn_rng

L90 = RiskLevels(alpha=0.9, beta=0.9)
params = baseline_params(2)

# True-parameter forecasts: simulate without burn-in so the forecaster's
# recursion state coincides exactly with the generator's.
sim = simulate_dcc(params, None, n=20_000, burnin=0, rng=spawn_rng(0, STAGE_DEMO, 2))

# ---------------------------------------------------------------------------
# Threshold evidence: CoVaR hits
# ---------------------------------------------------------------------------
forecasts = make_forecast_panel(params, None, sim.w, MeasureKind.COVAR, L90)
observations = [
    ObservationRecord(t=t + 1, x=float(sim.w[t, 0]), y=sim.w[t, 1:])
    for t in range(sim.n)
]
panel = build_indicator_panel(observations, forecasts, MeasureKind.COVAR, L90)

print(f"VaR violation rate      : {panel.i_var.mean():.4f}   (expect ~{1 - L90.beta:.2f})")
print(f"joint tail rate (K=2)   : {panel.evidence.mean(axis=1).round(4)}   (expect ~0.01 each)")

# ---------------------------------------------------------------------------
# PIT evidence: CoES cumulative violations
# ---------------------------------------------------------------------------
fc_pit = make_forecast_panel(params, None, sim.w, MeasureKind.COES, L90)
panel_pit = build_indicator_panel(observations, fc_pit, MeasureKind.COES, L90)

w = panel_pit.evidence[0]
expect_mean = (1 - L90.alpha) * (1 - L90.beta) / 2
print(f"\ncumulative violations > 0: {(w > 0).mean():.4f}   (expect ~0.01)")
print(f"cumulative violation mean: {w.mean():.5f}  (expect ~{expect_mean:.3f})")
