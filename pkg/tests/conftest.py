import math

import numpy as np
import pytest

from vhetpos.geodesy import EcefCoord, GeodeticCoord, lla_to_ecef, ned_rotation
from vhetpos.measurement import PseudorangeMeasurement
from vhetpos.sources import SourceKind

OTTAWA = GeodeticCoord(45.4215, -75.6972, 100.0)


def place(origin: GeodeticCoord, el_deg: float, az_deg: float, range_m: float) -> np.ndarray:
    """ECEF position of a point seen from ``origin`` at (el, az, range)."""
    el, az = math.radians(el_deg), math.radians(az_deg)
    ned = range_m * np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), -math.sin(el)])
    return lla_to_ecef(origin).as_array() + ned_rotation(origin).T @ ned


def make_measurements(truth: EcefCoord, sources: np.ndarray, sigmas, clock_m=0.0, noise=None,
                      kind=SourceKind.GPS):
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), (len(sources),))
    noise = np.zeros(len(sources)) if noise is None else noise
    out = []
    for i, s in enumerate(sources):
        rho = float(np.linalg.norm(s - truth.as_array()))
        out.append(PseudorangeMeasurement(kind, f"S{i:02d}", 0.0, rho + clock_m + noise[i], float(sigmas[i]),
                                          EcefCoord.from_array(s), rho))
    return out


EIGHT_SKY = [(80, 10), (55, 60), (40, 130), (25, 200), (35, 250), (60, 300), (20, 340), (30, 95)]


@pytest.fixture
def ottawa():
    return OTTAWA


@pytest.fixture
def eight_sources():
    return np.array([place(OTTAWA, el, az, 2.2e7) for el, az in EIGHT_SKY])
