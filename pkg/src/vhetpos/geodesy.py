"""WGS84 coordinate conversions and local-frame geometry.

Angles are radians internally; the coordinate dataclasses and every
public entry point take and return degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NearSingular, ZeroRange

C_MPS = 299_792_458.0
WGS84_A_M = 6_378_137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B_M = WGS84_A_M * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
WGS84_EP2 = WGS84_E2 / (1.0 - WGS84_E2)
GM_EARTH = 3.986005e14
EARTH_ROTATION_RATE = 7.2921151467e-5

_LAT_TOL_RAD = 1e-12
_MAX_LAT_ITER = 10


@dataclass(frozen=True)
class GeodeticCoord:
    lat_deg: float
    lon_deg: float
    height_m: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon_deg}")
        if not math.isfinite(self.height_m):
            raise ValueError(f"height not finite: {self.height_m}")


@dataclass(frozen=True)
class EcefCoord:
    x_m: float
    y_m: float
    z_m: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x_m, self.y_m, self.z_m])

    @classmethod
    def from_array(cls, v) -> "EcefCoord":
        return cls(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class NedVector:
    n_m: float
    e_m: float
    d_m: float

    def as_array(self) -> np.ndarray:
        return np.array([self.n_m, self.e_m, self.d_m])


def lla_to_ecef(g: GeodeticCoord) -> EcefCoord:
    return EcefCoord.from_array(lla_to_ecef_array(g.lat_deg, g.lon_deg, g.height_m))


def lla_to_ecef_array(lat_deg, lon_deg, height_m) -> np.ndarray:
    """Vectorized closed-form conversion; returns shape (..., 3)."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    n = WGS84_A_M / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + height_m) * cos_lat * np.cos(lon)
    y = (n + height_m) * cos_lat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + height_m) * sin_lat
    return np.stack([x, y, z], axis=-1)


def ecef_to_lla(e: EcefCoord) -> GeodeticCoord:
    """Inverse of :func:`lla_to_ecef`.

    Latitude is refined iteratively from Bowring's parametric-latitude
    start until successive estimates agree to 1e-12 rad.  On the polar
    axis the longitude is reported as 0.
    """
    x, y, z = e.x_m, e.y_m, e.z_m
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise ValueError("non-finite ECEF coordinate")
    if math.sqrt(x * x + y * y + z * z) < 1000.0:
        raise NearSingular("point within 1 km of Earth center")

    p = math.hypot(x, y)
    lon = math.atan2(y, x) if p > 0.0 else 0.0
    if p == 0.0:
        lat = math.copysign(math.pi / 2, z)
        return GeodeticCoord(math.degrees(lat), 0.0, abs(z) - WGS84_B_M)

    beta = math.atan2(z * WGS84_A_M, p * WGS84_B_M)
    lat = math.atan2(z + WGS84_EP2 * WGS84_B_M * math.sin(beta) ** 3,
                     p - WGS84_E2 * WGS84_A_M * math.cos(beta) ** 3)
    for _ in range(_MAX_LAT_ITER):
        beta = math.atan2((1.0 - WGS84_F) * math.sin(lat), math.cos(lat))
        new_lat = math.atan2(z + WGS84_EP2 * WGS84_B_M * math.sin(beta) ** 3,
                             p - WGS84_E2 * WGS84_A_M * math.cos(beta) ** 3)
        done = abs(new_lat - lat) < _LAT_TOL_RAD
        lat = new_lat
        if done:
            break

    sin_lat = math.sin(lat)
    n = WGS84_A_M / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    cos_lat = math.cos(lat)
    # Height formula choice avoids cancellation near the poles.
    if abs(cos_lat) > 1e-3:
        h = p / cos_lat - n
    else:
        h = z / sin_lat - n * (1.0 - WGS84_E2)
    return GeodeticCoord(math.degrees(lat), math.degrees(lon), h)


def ned_rotation(origin: GeodeticCoord) -> np.ndarray:
    """Rotation matrix taking ECEF difference vectors into NED at ``origin``."""
    lat = math.radians(origin.lat_deg)
    lon = math.radians(origin.lon_deg)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array([
        [-sl * co, -sl * so, cl],
        [-so, co, 0.0],
        [-cl * co, -cl * so, -sl],
    ])


def ecef_delta_to_ned(delta, origin: GeodeticCoord) -> NedVector:
    n, e, d = ned_rotation(origin) @ np.asarray(delta, dtype=float)
    return NedVector(float(n), float(e), float(d))


def elevation_azimuth(receiver: EcefCoord, receiver_lla: GeodeticCoord,
                      source: EcefCoord) -> tuple[float, float, float]:
    """Elevation and azimuth (degrees, azimuth clockwise from north) and range (m)."""
    delta = source.as_array() - receiver.as_array()
    rng = float(np.linalg.norm(delta))
    if rng == 0.0:
        raise ZeroRange("source coincides with receiver")
    n, e, d = ned_rotation(receiver_lla) @ delta
    el = math.degrees(math.asin(max(-1.0, min(1.0, -d / rng))))
    az = math.degrees(math.atan2(e, n)) % 360.0
    if az >= 360.0:
        az = 0.0
    return el, az, rng


def elevation_azimuth_many(receiver: np.ndarray, rot: np.ndarray, sources: np.ndarray):
    """Vectorized variant over an (m, 3) array of source positions."""
    delta = sources - receiver
    rng = np.linalg.norm(delta, axis=1)
    ned = delta @ rot.T
    el = np.degrees(np.arcsin(np.clip(-ned[:, 2] / rng, -1.0, 1.0)))
    az = np.degrees(np.arctan2(ned[:, 1], ned[:, 0])) % 360.0
    return el, az, rng, ned
