"""
Size/power studies and the command-line pipeline
================================================

Two ways to run the whole machine at once: the study driver sweeps a grid
of designs and reports alarm rates with first-alarm attribution, and the
command line chains the same stages through CSV/JSON files — simulate,
calibrate, monitor — which is how the tools are used on real data sitting
in files.  Budgets here are scaled far down so the demo runs in seconds;
published-quality numbers need the full preset budgets.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

from risk_sentinel.cli import main
from risk_sentinel.studies import make_preset, results_to_csv, run_study, scale_preset

# ---------------------------------------------------------------------------
# A miniature size study
# ---------------------------------------------------------------------------
# The full preset: 4 panel widths x 2 levels, n=1000, 5000 replications.
# Scaled to 2% it keeps the shape but floors the budgets at quick values.
preset = make_preset("size_table", "covar")
tiny = replace(scale_preset(preset, 0.02), k_grid=(1, 2), level_grid=(0.9,))

results = run_study(tiny, progress=lambda msg: print("  " + msg))
print("\nCSV rows:")
print(results_to_csv(results))

# ---------------------------------------------------------------------------
# The same pipeline through the command line
# ---------------------------------------------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    prefix = str(Path(tmp) / "demo_")

    main(["simulate-and-forecast", "--measure", "covar",
          "--alpha", "0.9", "--beta", "0.9", "--n", "300", "--num-series", "2",
          "--seed", "7", "--out-prefix", prefix])

    main(["critical-values", "--measure", "covar",
          "--alpha", "0.9", "--beta", "0.9", "--n", "300", "--m", "75",
          "--num-series", "2", "--iota", "0.1", "--reps", "1500",
          "--moment-reps", "30000", "--seed", "7",
          "--out", prefix + "cv.json"])

    main(["monitor", "--cv", prefix + "cv.json",
          "--returns", prefix + "returns.csv",
          "--forecasts", prefix + "forecasts.csv",
          "--out-prefix", prefix])

    alarms = Path(prefix + "alarms.json").read_text()
    trace_head = Path(prefix + "trace.csv").read_text().splitlines()[:3]
    print("\ntrace.csv begins:")
    for line in trace_head:
        print("  " + line)
    print("\nalarms.json begins:")
    print("  " + "\n  ".join(alarms.splitlines()[:8]))
