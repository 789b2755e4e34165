"""Scalar dB and dBm conversions."""

import math


def db_to_linear(db: float) -> float:
    """Convert a dB power ratio to linear scale."""
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a positive linear power ratio to dB."""
    return 10.0 * math.log10(value)


def dbm_to_mw(dbm: float) -> float:
    """Convert a power in dBm to milliwatts (-inf maps to 0 mW)."""
    return 10.0 ** (dbm / 10.0)
