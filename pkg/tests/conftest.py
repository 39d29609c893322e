"""Shared test configuration.

The statistical tests run Monte Carlo work inside hypothesis examples, so the
per-example deadline is disabled; everything else stays at hypothesis
defaults.
"""

from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile(
    "risk_sentinel",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("risk_sentinel")
