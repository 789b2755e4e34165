import math

import pytest

from wbansim.units import db_to_linear, dbm_to_mw, linear_to_db


def test_db_round_trip():
    for value in (-37.5, 0.0, 12.0):
        assert linear_to_db(db_to_linear(value)) == pytest.approx(value, rel=1e-12)


def test_known_values():
    assert db_to_linear(10.0) == pytest.approx(10.0, rel=1e-12)
    assert db_to_linear(-30.0) == pytest.approx(1e-3, rel=1e-12)
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(-100.0) == pytest.approx(1e-10, rel=1e-12)


def test_mute_power_maps_to_zero():
    assert dbm_to_mw(-math.inf) == 0.0
