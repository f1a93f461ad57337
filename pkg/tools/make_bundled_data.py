"""Regenerate the files under src/vhetpos/data.

The almanac is a nominal six-plane GPS constellation (not a broadcast
almanac); HAPS and gNB sites reproduce the described topology around a
synthetic Ottawa drive.  Run from the repository root.
"""
import math
from pathlib import Path

import numpy as np

from vhetpos.geodesy import WGS84_A_M
from vhetpos.sources import AlmanacRecord, format_yuma
from vhetpos.experiment.trajectory import synthetic_drive, write_trajectory

DATA = Path("src/vhetpos/data")
WEEK = 2250
TOA = 405504.0
DOWNTOWN = (45.4215, -75.6972)


def offset(lat, lon, north_m, east_m):
    dlat = north_m / WGS84_A_M
    dlon = east_m / (WGS84_A_M * math.cos(math.radians(lat)))
    return lat + math.degrees(dlat), lon + math.degrees(dlon)


def almanac():
    rng = np.random.default_rng(1995)
    slots = (6, 5, 5, 6, 5, 5)
    records = []
    prn = 1
    for plane, n in enumerate(slots):
        raan = math.radians(-150.0 + 60.0 * plane)
        for s in range(n):
            m0 = math.radians((360.0 / n) * s + 17.0 * plane) + rng.normal(0, 0.05)
            records.append(AlmanacRecord(
                prn=prn, health=63 if prn == 32 else 0,
                eccentricity=float(rng.uniform(0.002, 0.015)), toa_s=TOA,
                inclination_rad=math.radians(55.0 + rng.normal(0, 0.8)),
                raan_rate_rad_s=-8.0e-9 + rng.normal(0, 2e-10),
                sqrt_a_m05=5153.6 + rng.normal(0, 0.1),
                raan_rad=math.remainder(raan + rng.normal(0, 0.01), 2 * math.pi),
                arg_perigee_rad=float(rng.uniform(-math.pi, math.pi)),
                mean_anomaly_rad=math.remainder(m0, 2 * math.pi),
                af0_s=float(rng.normal(0, 2e-4)), af1_ss=float(rng.normal(0, 5e-12)), week=WEEK))
            prn += 1
    (DATA / "almanac.yuma").write_text(format_yuma(records), encoding="utf-8")


def haps_sites():
    lines = ["id,lat_deg,lon_deg,height_m,loiter_radius_m,loiter_period_s,phase_deg,direction"]
    lines.append(f"H1,{DOWNTOWN[0]:.6f},{DOWNTOWN[1]:.6f},20000,300,600,0,1")
    for i, bearing in enumerate((20.0, 92.0, 164.0, 236.0, 308.0), start=2):
        lat, lon = offset(*DOWNTOWN, 40000 * math.cos(math.radians(bearing)), 40000 * math.sin(math.radians(bearing)))
        lines.append(f"H{i},{lat:.6f},{lon:.6f},20000,300,600,{(i * 65) % 360},{1 if i % 2 else -1}")
    (DATA / "haps_sites.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def gnb_sites(points):
    n_sites = 40
    lat = np.array([p.position.lat_deg for p in points])
    lon = np.array([p.position.lon_deg for p in points])
    # Site j sits beside the route at evenly spaced epochs, alternating sides.
    sites = []
    for j in range(n_sites):
        k = int((j + 0.5) * len(points) / n_sites)
        k1 = min(k + 1, len(points) - 1)
        dn = (lat[k1] - lat[k - 1]) * math.pi / 180 * WGS84_A_M
        de = (lon[k1] - lon[k - 1]) * math.pi / 180 * WGS84_A_M * math.cos(math.radians(lat[k]))
        norm = math.hypot(dn, de)
        side = 1 if j % 2 == 0 else -1
        lateral = 50.0 + 40.0 * ((j * 7) % 5) / 4.0
        slat, slon = offset(lat[k], lon[k], side * lateral * (-de / norm), side * lateral * (dn / norm))
        sites.append((slat, slon))
    # Nested id order: the 20-site file holds every second site, the 30-site file adds every fourth.
    order = [j for j in range(n_sites) if j % 2 == 0] + [j for j in range(n_sites) if j % 4 == 1] + \
            [j for j in range(n_sites) if j % 4 == 3]
    rows = [(f"N{rank + 1:02d}", *sites[j]) for rank, j in enumerate(order)]
    for count in (20, 30, 40):
        lines = ["id,lat_deg,lon_deg,height_m"] + [f"{i},{a:.7f},{b:.7f},25" for i, a, b in rows[:count]]
        (DATA / f"gnb_{count}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


SCENARIO = """\
# {title}
[scenario]
name = {name}
trajectory = {trajectory}
almanac = almanac.yuma
haps_sites = haps_sites.csv
gnb_sites = gnb_{gnb}.csv
systems = gps,haps,gnb
combos = gps;gps+haps;gps+gnb;gps+haps+gnb
region_boundary_epoch_s = 380
epoch_rate_hz = 1
trials = 20
master_seed = 20230401
gps_week = {week}
gps_seconds = 400000

[sigma]
gps_suburban = 3
gps_urban = 7
haps_suburban = 2
haps_urban = 5
gnb = 0.5
floor = 0.01

[los]
elevation_mask_deg = 15
haps_p_los_suburban = 1.0
haps_p_los_urban = 0.75
haps_el_scale_deg = 10
# Milder than the library default of 25; urban H-vs-V gNB gains are sensitive to this band.
sat_urban_extra_mask_deg = 15
sat_urban_p_blocked_at_mask = 0.5

[clock]
initial_offset_m = 100000
drift_m_per_s = 0.5

[solver]
weighting = inverse_variance

[raim]
enabled = {raim}
alpha_global = 0.001
alpha_local = 0.001
max_exclusions = 3
min_redundancy_after = 1
{extra}"""

URBAN_START_S = 380.0

FAULT = """
[fault]
enabled = true
start_epoch_s = 380
victim_kind = gps
bias_m = 80
probability = 0.5
"""

MINIMAL = """\
# GPS only, every optional setting left at its default.
[scenario]
trajectory = trajectory.csv
almanac = almanac.yuma
systems = gps
gps_week = {week}
gps_seconds = 400000
"""


def scenarios():
    for gnb in (20, 30, 40):
        text = SCENARIO.format(title=f"Six HAPS, {gnb} gNBs, suburban-to-urban drive", name=f"paper_{gnb}gnb",
                               gnb=gnb, week=WEEK, raim="false", extra="", trajectory="trajectory.csv")
        (DATA / f"paper_{gnb}gnb.ini").write_text(text, encoding="utf-8")
    text = SCENARIO.format(title="Urban segment of the drive, 40 gNBs, injected GPS range faults",
                           name="urban_fault", gnb=40, week=WEEK, raim="true", extra=FAULT,
                           trajectory="trajectory_urban.csv")
    (DATA / "urban_fault.ini").write_text(text, encoding="utf-8")
    (DATA / "minimal_gps.ini").write_text(MINIMAL.format(week=WEEK), encoding="utf-8")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    points = synthetic_drive()
    write_trajectory(points, DATA / "trajectory.csv")
    write_trajectory([p for p in points if p.epoch_s >= URBAN_START_S], DATA / "trajectory_urban.csv")
    almanac()
    haps_sites()
    gnb_sites(points)
    scenarios()
