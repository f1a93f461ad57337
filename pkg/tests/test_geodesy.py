import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vhetpos.errors import NearSingular, ZeroRange
from vhetpos.geodesy import (
    WGS84_A_M,
    EcefCoord,
    GeodeticCoord,
    ecef_to_lla,
    elevation_azimuth,
    lla_to_ecef,
    ned_rotation,
)
from vhetpos.visibility import gnb_elevation_deg

from conftest import place

# Reference values from tools/geodesy_oracle.py (mpmath, 50 digits; meridian arc by quadrature).
OTTAWA_ECEF = (1107858.6763226215781, -4345415.4888893420949, 4520421.054947813846)
POLE_Z = 6356752.3142451794976
NORTH_1KM_LAT = 45.430497652303641105
NORTH_1KM_EL = -0.00449882733807843
NORTH_1KM_RANGE = 1000.0157028382


def test_equator_prime_meridian_is_semi_major_axis():
    e = lla_to_ecef(GeodeticCoord(0, 0, 0))
    assert (e.x_m, e.y_m, e.z_m) == (WGS84_A_M, 0.0, 0.0)


def test_pole_is_semi_minor_axis():
    e = lla_to_ecef(GeodeticCoord(90, 0, 0))
    assert abs(e.x_m) < 1e-9 and abs(e.y_m) < 1e-9
    assert e.z_m == pytest.approx(POLE_Z, abs=1e-6)


def test_ottawa_against_high_precision_oracle():
    e = lla_to_ecef(GeodeticCoord(45.4215, -75.6972, 100.0))
    assert np.allclose(e.as_array(), OTTAWA_ECEF, atol=1e-3, rtol=0)


def test_inverse_equator():
    g = ecef_to_lla(EcefCoord(WGS84_A_M, 0, 0))
    assert g.lat_deg == pytest.approx(0, abs=1e-12)
    assert g.lon_deg == 0.0
    assert g.height_m == pytest.approx(0, abs=1e-6)


def test_inverse_pole_reports_zero_longitude():
    g = ecef_to_lla(EcefCoord(0, 0, 6356752.314))
    assert g.lat_deg == 90.0
    assert g.lon_deg == 0.0
    assert g.height_m == pytest.approx(0, abs=1e-3)


def test_near_center_is_rejected():
    with pytest.raises(NearSingular):
        ecef_to_lla(EcefCoord(10.0, 20.0, -30.0))


@settings(max_examples=300, deadline=None)
@given(st.floats(-90, 90), st.floats(-180, 180), st.floats(-500, 5e7))
def test_round_trip(lat, lon, h):
    g = ecef_to_lla(lla_to_ecef(GeodeticCoord(lat, lon, h)))
    assert g.lat_deg == pytest.approx(lat, abs=1e-9)
    if abs(lat) < 90 - 1e-9:
        dlon = (g.lon_deg - lon + 180) % 360 - 180
        assert abs(dlon) < 1e-9 or abs(abs(dlon) - 360) < 1e-9
    assert g.height_m == pytest.approx(h, abs=1e-6)


def test_ned_rotation_axes_at_origin():
    r = ned_rotation(GeodeticCoord(0, 0, 0))
    assert np.allclose(r @ [0, 0, 1], [1, 0, 0])      # +z is north
    assert np.allclose(r @ [1, 0, 0], [0, 0, -1])     # +x is up
    assert np.allclose(r @ [0, 1, 0], [0, 1, 0])      # +y is east


def test_ned_rotation_is_proper_orthonormal():
    rng = np.random.default_rng(3)
    for lat, lon in zip(rng.uniform(-90, 90, 100), rng.uniform(-180, 180, 100)):
        r = ned_rotation(GeodeticCoord(lat, lon, 0))
        assert np.abs(r @ r.T - np.eye(3)).max() < 1e-12
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


def test_zenith_source(ottawa):
    rx = lla_to_ecef(ottawa)
    el, _, rng = elevation_azimuth(rx, ottawa, EcefCoord.from_array(place(ottawa, 90, 0, 20000)))
    assert el == pytest.approx(90.0, abs=1e-9)
    assert rng == pytest.approx(20000, abs=1e-6)


def test_gnb_elevation_bound_from_height_and_baseline():
    assert gnb_elevation_deg(25.0, 50.0) == pytest.approx(26.57, abs=0.005)
    rx_lla = GeodeticCoord(45.0, -75.0, 0.0)
    rx = lla_to_ecef(rx_lla)
    # 50 m horizontally east, 25 m above the receiver.
    src = place(rx_lla, math.degrees(math.atan2(25, 50)), 90.0, math.hypot(25, 50))
    el, az, rng = elevation_azimuth(rx, rx_lla, EcefCoord.from_array(src))
    assert el == pytest.approx(math.degrees(math.atan(0.5)), abs=1e-9)
    assert az == pytest.approx(90.0, abs=1e-9)


def test_due_north_one_kilometre_against_oracle():
    rx_lla = GeodeticCoord(45.4215, -75.6972, 100.0)
    src = lla_to_ecef(GeodeticCoord(NORTH_1KM_LAT, -75.6972, 100.0))
    el, az, rng = elevation_azimuth(lla_to_ecef(rx_lla), rx_lla, src)
    assert abs(el) < 0.01
    assert el == pytest.approx(NORTH_1KM_EL, abs=1e-9)
    assert az == pytest.approx(0.0, abs=1e-9) or az == pytest.approx(360.0, abs=1e-9)
    assert rng == pytest.approx(NORTH_1KM_RANGE, abs=1e-6)


def test_range_is_euclidean_distance(ottawa):
    rx = lla_to_ecef(ottawa)
    src = EcefCoord(rx.x_m + 1234.5, rx.y_m - 200.0, rx.z_m + 17.0)
    _, _, rng = elevation_azimuth(rx, ottawa, src)
    assert rng == float(np.linalg.norm(src.as_array() - rx.as_array()))


def test_zero_range_raises(ottawa):
    rx = lla_to_ecef(ottawa)
    with pytest.raises(ZeroRange):
        elevation_azimuth(rx, ottawa, rx)


def test_coordinate_validation():
    with pytest.raises(ValueError):
        GeodeticCoord(91, 0, 0)
    with pytest.raises(ValueError):
        GeodeticCoord(0, 181, 0)
    with pytest.raises(ValueError):
        GeodeticCoord(0, 0, math.inf)
