"""Scenario configuration files.

Scenarios are INI files read with :mod:`configparser`.  Section and key
names are listed in ``_SCHEMA``; see README.md for the full grammar.
Relative paths resolve against the directory holding the file.  Unknown
sections or keys are rejected so typos cannot silently fall back to a
default.
"""
from __future__ import annotations

import configparser
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError, ParseError
from ..measurement import ReceiverClock, SigmaTable
from ..raim import RaimConfig
from ..solver import WEIGHTING_MODES
from ..sources import KIND_ORDER, SourceCatalog, SourceKind, load_gnb_sites, load_haps_sites, load_yuma
from ..visibility import HapsLosConfig, LosModelConfig, SatUrbanConfig
from .trajectory import TrajectoryPoint, load_trajectory, resample

log = logging.getLogger(__name__)

Combo = tuple[SourceKind, ...]
PAPER_COMBOS = "gps;gps+haps;gps+gnb;gps+haps+gnb"

# section -> key -> (type, default); a default of None marks the key optional
# with no value, _REQUIRED marks it mandatory.
_REQUIRED = object()
_SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "scenario": {
        "name": (str, "scenario"),
        "trajectory": (str, _REQUIRED),
        "almanac": (str, _REQUIRED),
        "haps_sites": (str, None),
        "gnb_sites": (str, None),
        "systems": (str, _REQUIRED),
        "region_boundary_epoch_s": (float, 380.0),
        "epoch_rate_hz": (float, 1.0),
        "trials": (int, 20),
        "master_seed": (int, 0),
        "gps_week": (int, _REQUIRED),
        "gps_seconds": (float, _REQUIRED),
        "combos": (str, None),
    },
    "sigma": {
        "gps_suburban": (float, 3.0),
        "gps_urban": (float, 7.0),
        "haps_suburban": (float, 2.0),
        "haps_urban": (float, 5.0),
        "gnb": (float, 0.5),
        "floor": (float, 0.01),
    },
    "los": {
        "elevation_mask_deg": (float, 15.0),
        "haps_p_los_suburban": (float, 1.0),
        "haps_p_los_urban": (float, 0.75),
        "haps_el_scale_deg": (float, 10.0),
        "sat_urban_extra_mask_deg": (float, 25.0),
        "sat_urban_p_blocked_at_mask": (float, 0.5),
    },
    "clock": {
        "initial_offset_m": (float, 1.0e5),
        "drift_m_per_s": (float, 0.5),
    },
    "solver": {
        "weighting": (str, "inverse_variance"),
        "tol_m": (float, 1e-4),
        "max_iter": (int, 20),
    },
    "raim": {
        "enabled": (bool, False),
        "alpha_global": (float, 0.001),
        "alpha_local": (float, 0.001),
        "max_exclusions": (int, 3),
        "min_redundancy_after": (int, 1),
    },
    "fault": {
        "enabled": (bool, False),
        "start_epoch_s": (float, 0.0),
        "end_epoch_s": (float, math.inf),
        "victim_kind": (str, "gps"),
        "bias_m": (float, 100.0),
        "probability": (float, 1.0),
    },
}


@dataclass(frozen=True)
class FaultInjection:
    """A bias added to one visible source of ``victim_kind`` per affected epoch."""

    start_epoch_s: float
    end_epoch_s: float
    victim_kind: SourceKind
    bias_m: float
    probability: float = 1.0

    def active(self, epoch_s: float) -> bool:
        return self.start_epoch_s <= epoch_s <= self.end_epoch_s


@dataclass
class ScenarioConfig:
    trajectory_path: Path
    almanac_path: Path
    systems: Combo
    gps_time_origin: tuple[int, float]
    haps_sites_path: Path | None = None
    gnb_sites_path: Path | None = None
    name: str = "scenario"
    region_boundary_epoch_s: float = 380.0
    sigma_table: SigmaTable = field(default_factory=SigmaTable)
    los_config: LosModelConfig = field(default_factory=LosModelConfig)
    raim_config: RaimConfig = field(default_factory=RaimConfig)
    raim_enabled: bool = False
    clock: ReceiverClock = field(default_factory=ReceiverClock)
    weighting: str = "inverse_variance"
    tol_m: float = 1e-4
    max_iter: int = 20
    epoch_rate_hz: float = 1.0
    trials: int = 20
    master_seed: int = 0
    fault: FaultInjection | None = None
    combos: tuple[Combo, ...] = ()
    source_path: Path | None = None

    def __post_init__(self):
        if not self.systems:
            raise ConfigError("scenario.systems", "at least one system is required")
        if self.trials < 1:
            raise ConfigError("scenario.trials", "trials ≥ 1")
        if self.epoch_rate_hz <= 0:
            raise ConfigError("scenario.epoch_rate_hz", "must be > 0")
        if self.weighting not in WEIGHTING_MODES:
            raise ConfigError("solver.weighting", f"must be one of {', '.join(WEIGHTING_MODES)}")
        if not self.combos:
            self.combos = (self.systems,)

    def load_catalog(self) -> SourceCatalog:
        try:
            return SourceCatalog(
                almanac=load_yuma(self.almanac_path),
                haps=load_haps_sites(self.haps_sites_path) if self.haps_sites_path else [],
                gnbs=load_gnb_sites(self.gnb_sites_path) if self.gnb_sites_path else [],
                gps_time_origin=self.gps_time_origin,
            )
        except (OSError, ParseError) as exc:
            raise ConfigError("scenario", f"cannot load source files: {exc}") from exc

    def load_trajectory(self) -> list[TrajectoryPoint]:
        try:
            return resample(load_trajectory(self.trajectory_path), self.epoch_rate_hz)
        except (OSError, ParseError) as exc:
            raise ConfigError("scenario.trajectory", str(exc)) from exc

    def echo(self) -> dict[str, Any]:
        """JSON-ready description of the configuration (paths as given)."""
        return {
            "name": self.name,
            "trajectory": str(self.trajectory_path.name),
            "almanac": str(self.almanac_path.name),
            "haps_sites": self.haps_sites_path.name if self.haps_sites_path else None,
            "gnb_sites": self.gnb_sites_path.name if self.gnb_sites_path else None,
            "systems": combo_label(self.systems),
            "combos": [combo_label(c) for c in self.combos],
            "region_boundary_epoch_s": self.region_boundary_epoch_s,
            "epoch_rate_hz": self.epoch_rate_hz,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "gps_time_origin": list(self.gps_time_origin),
            "sigma": asdict(self.sigma_table),
            "los": asdict(self.los_config),
            "clock": asdict(self.clock),
            "solver": {"weighting": self.weighting, "tol_m": self.tol_m, "max_iter": self.max_iter},
            "raim": {"enabled": self.raim_enabled, **asdict(self.raim_config)},
            "fault": None if self.fault is None else {
                **asdict(self.fault), "victim_kind": self.fault.victim_kind.value,
                "end_epoch_s": None if math.isinf(self.fault.end_epoch_s) else self.fault.end_epoch_s},
        }


def parse_combo(text: str) -> Combo:
    """``"gps+gnb"`` or ``"gps,gnb"`` to a canonical kind tuple."""
    parts = [p.strip().lower() for p in text.replace(",", "+").split("+") if p.strip()]
    if not parts:
        raise ConfigError("systems", "empty system list")
    kinds = set()
    for p in parts:
        try:
            kinds.add(SourceKind(p))
        except ValueError:
            raise ConfigError("systems", f"unknown system {p!r}; expected gps, haps or gnb") from None
    return tuple(k for k in KIND_ORDER if k in kinds)


def parse_combos(text: str) -> tuple[Combo, ...]:
    combos = tuple(parse_combo(c) for c in text.split(";") if c.strip())
    if not combos:
        raise ConfigError("combos", "at least one combination is required")
    return combos


def combo_label(combo: Combo) -> str:
    return "-".join(k.value for k in combo)


def _convert(section: str, key: str, typ: type, raw: str):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        return typ(raw.strip())
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r} as {typ.__name__}") from None


def _read_values(parser: configparser.ConfigParser) -> dict[str, dict[str, Any]]:
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    values: dict[str, dict[str, Any]] = {}
    for section, keys in _SCHEMA.items():
        values[section] = {}
        for key, (typ, default) in keys.items():
            if parser.has_option(section, key):
                values[section][key] = _convert(section, key, typ, parser.get(section, key))
            elif default is _REQUIRED:
                raise ConfigError(f"{section}.{key}", "required")
            else:
                values[section][key] = default
                log.info("default %s.%s = %s", section, key, default)
    return values


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read, validate, and fill defaults for a scenario file."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("path", f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError("syntax", str(exc)) from exc
    return scenario_from_values(_read_values(parser), path.parent, source_path=path)


def _resolve(base: Path, section: str, key: str, raw: str | None) -> Path | None:
    if raw is None:
        return None
    p = Path(raw)
    p = p if p.is_absolute() else base / p
    if not p.exists():
        raise ConfigError(f"{section}.{key}", f"file not found: {p}")
    return p


def scenario_from_values(v: dict[str, dict[str, Any]], base: Path,
                         source_path: Path | None = None) -> ScenarioConfig:
    s = v["scenario"]
    systems = parse_combo(s["systems"])
    haps_path = _resolve(base, "scenario", "haps_sites", s["haps_sites"])
    gnb_path = _resolve(base, "scenario", "gnb_sites", s["gnb_sites"])
    combos = parse_combos(s["combos"]) if s["combos"] else (systems,)
    for combo in (systems,) + combos:
        if SourceKind.HAPS in combo and haps_path is None:
            raise ConfigError("scenario.haps_sites", "required when HAPS is among the systems")
        if SourceKind.GNB in combo and gnb_path is None:
            raise ConfigError("scenario.gnb_sites", "required when GNB is among the systems")
    try:
        sigma = SigmaTable(**v["sigma"])
        los_v = v["los"]
        los = LosModelConfig(
            elevation_mask_deg=los_v["elevation_mask_deg"],
            haps_los=HapsLosConfig(los_v["haps_p_los_suburban"], los_v["haps_p_los_urban"],
                                   los_v["haps_el_scale_deg"]),
            sat_urban=SatUrbanConfig(los_v["sat_urban_extra_mask_deg"], los_v["sat_urban_p_blocked_at_mask"]),
        )
        raim_v = dict(v["raim"])
        raim_enabled = raim_v.pop("enabled")
        raim = RaimConfig(**raim_v)
    except ValueError as exc:
        raise ConfigError("parameters", str(exc)) from None
    fault = None
    f = v["fault"]
    if f["enabled"]:
        try:
            victim = SourceKind(f["victim_kind"].lower())
        except ValueError:
            raise ConfigError("fault.victim_kind", "expected gps, haps or gnb") from None
        if not 0.0 <= f["probability"] <= 1.0:
            raise ConfigError("fault.probability", "must lie in [0, 1]")
        fault = FaultInjection(f["start_epoch_s"], f["end_epoch_s"], victim, f["bias_m"], f["probability"])
    if s["trials"] < 1:
        raise ConfigError("scenario.trials", "trials ≥ 1")
    return ScenarioConfig(
        name=s["name"],
        trajectory_path=_resolve(base, "scenario", "trajectory", s["trajectory"]),
        almanac_path=_resolve(base, "scenario", "almanac", s["almanac"]),
        haps_sites_path=haps_path,
        gnb_sites_path=gnb_path,
        systems=systems,
        gps_time_origin=(s["gps_week"], s["gps_seconds"]),
        region_boundary_epoch_s=s["region_boundary_epoch_s"],
        sigma_table=sigma,
        los_config=los,
        raim_config=raim,
        raim_enabled=raim_enabled,
        clock=ReceiverClock(v["clock"]["initial_offset_m"], v["clock"]["drift_m_per_s"]),
        weighting=v["solver"]["weighting"],
        tol_m=v["solver"]["tol_m"],
        max_iter=v["solver"]["max_iter"],
        epoch_rate_hz=s["epoch_rate_hz"],
        trials=s["trials"],
        master_seed=s["master_seed"],
        fault=fault,
        combos=combos,
        source_path=source_path,
    )
