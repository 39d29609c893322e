"""Exception hierarchy mapped to CLI exit codes.

Exit-code contract: 0 ok, 2 schema/input/configuration error, 3 calibration
error, 4 numeric error.  Anything else that escapes is a plain bug (exit 1).
"""

from __future__ import annotations


class RiskSentinelError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class SchemaError(RiskSentinelError):
    """Malformed, inconsistent, or out-of-range input data."""

    exit_code = 2


class ConfigError(RiskSentinelError):
    """Incompatible configuration (mismatched metadata, bad parameters)."""

    exit_code = 2


class CalibrationError(RiskSentinelError):
    """No feasible critical values for the requested size bound."""

    exit_code = 3


class NumericError(RiskSentinelError):
    """A numerical routine failed to converge to the required tolerance."""

    exit_code = 4
