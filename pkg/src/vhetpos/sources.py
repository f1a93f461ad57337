"""Ranging sources: GPS almanac satellites, HAPS loiter orbits, static gNBs."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import KeplerNoConvergence, ParseError
from .geodesy import (
    EARTH_ROTATION_RATE,
    GM_EARTH,
    EcefCoord,
    GeodeticCoord,
    lla_to_ecef,
    ned_rotation,
)

log = logging.getLogger(__name__)

SECONDS_PER_WEEK = 604800.0
_KEPLER_TOL = 1e-12
_KEPLER_MAX_ITER = 30


class SourceKind(str, enum.Enum):
    GPS = "gps"
    HAPS = "haps"
    GNB = "gnb"


KIND_ORDER = (SourceKind.GPS, SourceKind.HAPS, SourceKind.GNB)


@dataclass(frozen=True)
class AlmanacRecord:
    prn: int
    health: int
    eccentricity: float
    toa_s: float
    inclination_rad: float
    raan_rate_rad_s: float
    sqrt_a_m05: float
    raan_rad: float
    arg_perigee_rad: float
    mean_anomaly_rad: float
    af0_s: float
    af1_ss: float
    week: int

    def __post_init__(self):
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity out of range: {self.eccentricity}")
        if not self.sqrt_a_m05 > 0.0:
            raise ValueError(f"sqrt(A) must be positive: {self.sqrt_a_m05}")
        if not 0.0 <= self.toa_s < SECONDS_PER_WEEK:
            raise ValueError(f"time of applicability out of range: {self.toa_s}")


@dataclass(frozen=True)
class HapsPlatform:
    id: str
    center: GeodeticCoord
    loiter_radius_m: float = 300.0
    loiter_period_s: float = 600.0
    phase_rad: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if self.loiter_radius_m < 0:
            raise ValueError("loiter_radius_m must be >= 0")
        if self.loiter_period_s <= 0:
            raise ValueError("loiter_period_s must be > 0")
        if self.center.height_m <= 0:
            raise ValueError("HAPS center height must be > 0")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True)
class GnbSite:
    id: str
    position: GeodeticCoord

    def __post_init__(self):
        if self.position.height_m <= 0:
            raise ValueError("gNB height must be > 0")


@dataclass(frozen=True)
class SourceState:
    kind: SourceKind
    id: str
    position: EcefCoord
    clock_offset_m: float = 0.0

    def __post_init__(self):
        if self.kind is not SourceKind.GPS and self.clock_offset_m != 0.0:
            raise ValueError("HAPS and gNB sources carry no clock offset")

    @property
    def key(self) -> str:
        return f"{self.kind.value}:{self.id}"


# --- YUMA almanac ---------------------------------------------------------

# (prefix, attribute, converter); prefixes are matched case-insensitively.
_YUMA_FIELDS = (
    ("id", "prn", int),
    ("health", "health", int),
    ("eccentricity", "eccentricity", float),
    ("time of applicability", "toa_s", float),
    ("orbital inclination", "inclination_rad", float),
    ("rate of right ascen", "raan_rate_rad_s", float),
    ("sqrt(a)", "sqrt_a_m05", float),
    ("right ascen at week", "raan_rad", float),
    ("argument of perigee", "arg_perigee_rad", float),
    ("mean anom", "mean_anomaly_rad", float),
    ("af0", "af0_s", float),
    ("af1", "af1_ss", float),
    ("week", "week", int),
)


def _to_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def parse_yuma(text: str | Iterable[str]) -> list[AlmanacRecord]:
    """Parse a YUMA almanac into records.

    Every block must carry all thirteen fields.  A malformed numeric value
    raises :class:`ParseError` with the offending line number; a block
    with missing fields or out-of-range elements raises with its
    (zero-based) block index.
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    blocks: list[list[tuple[int, str]]] = []
    current: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("****"):
            if current:
                blocks.append(current)
                current = []
            continue
        current.append((lineno, line))
    if current:
        blocks.append(current)

    records = []
    for index, block in enumerate(blocks):
        values: dict[str, float | int] = {}
        for lineno, line in block:
            key, sep, value = line.partition(":")
            if not sep:
                raise ParseError(f"expected 'key: value', got {line!r}", line=lineno)
            key = key.strip().lower()
            for prefix, attr, conv in _YUMA_FIELDS:
                if key.startswith(prefix):
                    try:
                        values[attr] = _to_int(value) if conv is int else float(value)
                    except ValueError:
                        raise ParseError(f"bad numeric value {value.strip()!r} for {prefix!r}",
                                         line=lineno) from None
                    break
            else:
                log.debug("ignoring unknown almanac key %r on line %d", key, lineno)
        missing = [attr for _, attr, _ in _YUMA_FIELDS if attr not in values]
        if missing:
            raise ParseError(f"missing fields {missing}", block=index)
        try:
            records.append(AlmanacRecord(**values))
        except ValueError as exc:
            raise ParseError(str(exc), block=index) from None
    return records


def load_yuma(path: str | Path) -> list[AlmanacRecord]:
    return parse_yuma(Path(path).read_text(encoding="utf-8"))


def format_yuma(records: Sequence[AlmanacRecord]) -> str:
    out = io.StringIO()
    for r in records:
        out.write(f"******** Week {r.week % 1024} almanac for PRN-{r.prn:02d} ********\n")
        out.write(f"ID:                         {r.prn:02d}\n")
        out.write(f"Health:                     {r.health:03d}\n")
        out.write(f"Eccentricity:               {r.eccentricity:.10E}\n")
        out.write(f"Time of Applicability(s):  {r.toa_s:.4f}\n")
        out.write(f"Orbital Inclination(rad):   {r.inclination_rad:.10f}\n")
        out.write(f"Rate of Right Ascen(r/s):  {r.raan_rate_rad_s:.10E}\n")
        out.write(f"SQRT(A)  (m 1/2):           {r.sqrt_a_m05:.6f}\n")
        out.write(f"Right Ascen at Week(rad):  {r.raan_rad:.10E}\n")
        out.write(f"Argument of Perigee(rad):   {r.arg_perigee_rad:.9f}\n")
        out.write(f"Mean Anom(rad):             {r.mean_anomaly_rad:.10E}\n")
        out.write(f"Af0(s):                     {r.af0_s:.10E}\n")
        out.write(f"Af1(s/s):                   {r.af1_ss:.10E}\n")
        out.write(f"week:                       {r.week}\n\n")
    return out.getvalue()


# --- almanac propagation --------------------------------------------------

def _time_since_toa(week_rec: int, toa_s: np.ndarray, week: int, seconds: float) -> np.ndarray:
    # Almanac weeks are often truncated to 10 bits; compare modulo 1024.
    dweek = ((np.asarray(week) - np.asarray(week_rec)) + 512) % 1024 - 512
    return dweek * SECONDS_PER_WEEK + seconds - toa_s


def solve_kepler(mean_anomaly, eccentricity):
    """Newton iteration on M = E - e sin E, vectorized."""
    # Wrapping shifts E by whole turns only; Danby's start converges for any e < 1.
    m = np.remainder(np.asarray(mean_anomaly, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    e = np.asarray(eccentricity, dtype=float)
    ecc_anom = m + 0.85 * e * np.where(np.sin(m) < 0.0, -1.0, 1.0)
    for _ in range(_KEPLER_MAX_ITER):
        step = (ecc_anom - e * np.sin(ecc_anom) - m) / (1.0 - e * np.cos(ecc_anom))
        ecc_anom = ecc_anom - step
        if np.all(np.abs(step) < _KEPLER_TOL):
            return ecc_anom
    raise KeplerNoConvergence(f"Kepler iteration did not converge for e={e}")


def propagate_almanac_many(records: Sequence[AlmanacRecord], week: int, seconds: float) -> np.ndarray:
    """ECEF positions (m, 3) of every record at GPS time (week, seconds)."""
    if not records:
        return np.zeros((0, 3))
    g = lambda name: np.array([getattr(r, name) for r in records], dtype=float)
    toa = g("toa_s")
    tk = _time_since_toa(np.array([r.week for r in records]), toa, week, seconds)
    if np.any(np.abs(tk) >= 7 * 86400.0):
        raise ValueError("requested time is more than 7 days from the almanac epoch")
    a = g("sqrt_a_m05") ** 2
    e = g("eccentricity")
    n = np.sqrt(GM_EARTH) / a ** 1.5
    ecc_anom = solve_kepler(g("mean_anomaly_rad") + n * tk, e)
    nu = np.arctan2(np.sqrt(1.0 - e * e) * np.sin(ecc_anom), np.cos(ecc_anom) - e)
    phi = nu + g("arg_perigee_rad")
    r = a * (1.0 - e * np.cos(ecc_anom))
    xp, yp = r * np.cos(phi), r * np.sin(phi)
    omega = g("raan_rad") + (g("raan_rate_rad_s") - EARTH_ROTATION_RATE) * tk - EARTH_ROTATION_RATE * toa
    inc = g("inclination_rad")
    co, so, ci = np.cos(omega), np.sin(omega), np.cos(inc)
    return np.column_stack([
        xp * co - yp * ci * so,
        xp * so + yp * ci * co,
        yp * np.sin(inc),
    ])


def propagate_almanac(rec: AlmanacRecord, week: int, seconds: float) -> EcefCoord:
    return EcefCoord.from_array(propagate_almanac_many([rec], week, seconds)[0])


# --- HAPS and gNB ---------------------------------------------------------

def haps_position(p: HapsPlatform, t_s) -> np.ndarray:
    """ECEF position(s) of a loitering platform; ``t_s`` may be an array."""
    t = np.asarray(t_s, dtype=float)
    theta = p.phase_rad + p.direction * 2.0 * np.pi * t / p.loiter_period_s
    # Angle measured from north toward east in the center's tangent plane.
    ned = np.stack([p.loiter_radius_m * np.cos(theta),
                    p.loiter_radius_m * np.sin(theta),
                    np.zeros_like(theta)], axis=-1)
    center = lla_to_ecef(p.center).as_array()
    return center + ned @ ned_rotation(p.center)


def haps_state(p: HapsPlatform, t_s: float) -> SourceState:
    return SourceState(SourceKind.HAPS, p.id, EcefCoord.from_array(haps_position(p, t_s)))


@lru_cache(maxsize=4096)
def _site_ecef(position: GeodeticCoord) -> EcefCoord:
    return lla_to_ecef(position)


def gnb_state(s: GnbSite) -> SourceState:
    return SourceState(SourceKind.GNB, s.id, _site_ecef(s.position))


def _open_csv_rows(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: missing header row")
        return [{k.strip(): (v or "").strip() for k, v in row.items()} for row in reader]


def load_haps_sites(path: str | Path) -> list[HapsPlatform]:
    """Read ``id,lat_deg,lon_deg,height_m[,loiter_radius_m,loiter_period_s,phase_deg,direction]``."""
    out = []
    for lineno, row in enumerate(_open_csv_rows(path), start=2):
        try:
            center = GeodeticCoord(float(row["lat_deg"]), float(row["lon_deg"]), float(row["height_m"]))
            kwargs = {}
            if row.get("loiter_radius_m"):
                kwargs["loiter_radius_m"] = float(row["loiter_radius_m"])
            if row.get("loiter_period_s"):
                kwargs["loiter_period_s"] = float(row["loiter_period_s"])
            if row.get("phase_deg"):
                kwargs["phase_rad"] = math.radians(float(row["phase_deg"]))
            if row.get("direction"):
                kwargs["direction"] = int(row["direction"])
            out.append(HapsPlatform(row["id"], center, **kwargs))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}", line=lineno) from None
    return out


def load_gnb_sites(path: str | Path) -> list[GnbSite]:
    out = []
    for lineno, row in enumerate(_open_csv_rows(path), start=2):
        try:
            pos = GeodeticCoord(float(row["lat_deg"]), float(row["lon_deg"]), float(row["height_m"]))
            out.append(GnbSite(row["id"], pos))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}", line=lineno) from None
    return out


# --- assembly -------------------------------------------------------------

@dataclass
class SourceCatalog:
    """Everything needed to place the ranging sources at any scenario time.

    ``gps_time_origin`` binds scenario t = 0 to a (week, seconds) GPS time.
    """

    almanac: list[AlmanacRecord] = field(default_factory=list)
    haps: list[HapsPlatform] = field(default_factory=list)
    gnbs: list[GnbSite] = field(default_factory=list)
    gps_time_origin: tuple[int, float] = (0, 0.0)

    def healthy_gps(self) -> list[AlmanacRecord]:
        return sorted((r for r in self.almanac if r.health == 0), key=lambda r: r.prn)

    def sorted_haps(self) -> list[HapsPlatform]:
        return sorted(self.haps, key=lambda p: p.id)

    def sorted_gnbs(self) -> list[GnbSite]:
        return sorted(self.gnbs, key=lambda s: s.id)

    def gps_time(self, t_s: float) -> tuple[int, float]:
        week, sec = self.gps_time_origin
        total = sec + t_s
        extra = math.floor(total / SECONDS_PER_WEEK)
        return week + extra, total - extra * SECONDS_PER_WEEK


def assemble_sources(catalog: SourceCatalog, t_s: float,
                     systems: Iterable[SourceKind] = KIND_ORDER) -> list[SourceState]:
    """All sources of the requested kinds at scenario time ``t_s``.

    Ordering is GPS by PRN, then HAPS by id, then gNB by id.  A satellite
    whose propagation fails is dropped and logged.
    """
    systems = {SourceKind(s) for s in systems}
    out: list[SourceState] = []
    if SourceKind.GPS in systems:
        week, sec = catalog.gps_time(t_s)
        healthy = catalog.healthy_gps()
        try:
            positions = [EcefCoord.from_array(x) for x in propagate_almanac_many(healthy, week, sec)]
        except (KeplerNoConvergence, ValueError):
            # Find the failing records one at a time.
            positions = []
            for rec in healthy:
                try:
                    positions.append(propagate_almanac(rec, week, sec))
                except (KeplerNoConvergence, ValueError) as exc:
                    log.warning("dropping PRN %02d at t=%.3f s: %s", rec.prn, t_s, exc)
                    positions.append(None)
        for rec, pos in zip(healthy, positions):
            if pos is not None:
                # Almanac clock terms are folded into the lumped range error.
                out.append(SourceState(SourceKind.GPS, f"G{rec.prn:02d}", pos, 0.0))
    if SourceKind.HAPS in systems:
        out.extend(haps_state(p, t_s) for p in catalog.sorted_haps())
    if SourceKind.GNB in systems:
        out.extend(gnb_state(s) for s in catalog.sorted_gnbs())
    return out
