"""Receiver trajectories: CSV ingestion and the bundled synthetic drive."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ParseError
from ..geodesy import WGS84_A_M, GeodeticCoord

TRAJECTORY_HEADER = ("epoch_s", "lat_deg", "lon_deg", "height_m")

# Suburban campus start to downtown finish, roughly the length of the
# drive described for the Ottawa experiment.
DRIVE_START = (45.3850, -75.6990)
DRIVE_WAYPOINTS = (
    # (duration_s, heading_deg, speed_mps)
    (380.0, 8.0, 11.0),
    (320.0, 30.0, 8.0),
)
RECEIVER_HEIGHT_M = 2.0


@dataclass(frozen=True)
class TrajectoryPoint:
    epoch_s: float
    position: GeodeticCoord


def load_trajectory(path: str | Path) -> list[TrajectoryPoint]:
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in TRAJECTORY_HEADER):
            raise ParseError(f"{path}: header must contain {','.join(TRAJECTORY_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                pos = GeodeticCoord(float(row["lat_deg"]), float(row["lon_deg"]), float(row["height_m"]))
                points.append(TrajectoryPoint(float(row["epoch_s"]), pos))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from None
            if len(points) > 1 and points[-1].epoch_s <= points[-2].epoch_s:
                raise ParseError(f"{path}: epochs must be strictly increasing", line=lineno)
    if not points:
        raise ParseError(f"{path}: trajectory is empty")
    return points


def write_trajectory(points: Sequence[TrajectoryPoint], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(TRAJECTORY_HEADER) + "\n")
        for p in points:
            g = p.position
            fh.write(f"{p.epoch_s:.3f},{g.lat_deg:.9f},{g.lon_deg:.9f},{g.height_m:.3f}\n")


def resample(points: Sequence[TrajectoryPoint], rate_hz: float) -> list[TrajectoryPoint]:
    """Linear interpolation onto a uniform grid starting at the first epoch."""
    t = np.array([p.epoch_s for p in points])
    if len(t) == 1:
        return list(points)
    grid = t[0] + np.arange(int(math.floor((t[-1] - t[0]) * rate_hz + 1e-9)) + 1) / rate_hz
    lat = np.interp(grid, t, [p.position.lat_deg for p in points])
    lon = np.interp(grid, t, [p.position.lon_deg for p in points])
    h = np.interp(grid, t, [p.position.height_m for p in points])
    return [TrajectoryPoint(float(grid[i]), GeodeticCoord(float(lat[i]), float(lon[i]), float(h[i])))
            for i in range(len(grid))]


def synthetic_drive(rate_hz: float = 1.0, start=DRIVE_START, legs=DRIVE_WAYPOINTS,
                    height_m: float = RECEIVER_HEIGHT_M) -> list[TrajectoryPoint]:
    """Two-leg suburban-to-urban drive on a spherical-Earth dead-reckoning grid.

    The legs bend gently (a slow sinusoidal heading wobble) so the
    receiver-to-gNB geometry varies along the route.
    """
    lat, lon = map(math.radians, start)
    points = []
    t = 0.0
    dt = 1.0 / rate_hz
    for duration, heading, speed in legs:
        steps = int(round(duration * rate_hz))
        for _ in range(steps):
            points.append(TrajectoryPoint(round(t, 9), GeodeticCoord(math.degrees(lat), math.degrees(lon), height_m)))
            hdg = math.radians(heading + 12.0 * math.sin(2.0 * math.pi * t / 240.0))
            dist = speed * dt
            lat += dist * math.cos(hdg) / WGS84_A_M
            lon += dist * math.sin(hdg) / (WGS84_A_M * math.cos(lat))
            t += dt
    return points
