"""Line-of-sight models and per-epoch visibility sampling."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geodesy import EcefCoord, GeodeticCoord, elevation_azimuth_many, ned_rotation
from .sources import SourceKind, SourceState

GNB_LOS_BREAKPOINT_M = 18.0
GNB_LOS_DECAY_M = 36.0


class Region(str, enum.Enum):
    SUBURBAN = "suburban"
    URBAN = "urban"


@dataclass(frozen=True)
class HapsLosConfig:
    p_los_suburban: float = 1.0
    p_los_urban: float = 0.75
    el_scale_deg: float = 10.0


@dataclass(frozen=True)
class SatUrbanConfig:
    extra_mask_deg: float = 25.0
    p_blocked_at_mask: float = 0.5


@dataclass(frozen=True)
class LosModelConfig:
    elevation_mask_deg: float = 15.0
    haps_los: HapsLosConfig = field(default_factory=HapsLosConfig)
    sat_urban: SatUrbanConfig = field(default_factory=SatUrbanConfig)

    def __post_init__(self):
        for name, p in (("haps_p_los_suburban", self.haps_los.p_los_suburban),
                        ("haps_p_los_urban", self.haps_los.p_los_urban),
                        ("sat_urban_p_blocked_at_mask", self.sat_urban.p_blocked_at_mask)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name, m in (("elevation_mask_deg", self.elevation_mask_deg),
                        ("sat_urban_extra_mask_deg", self.sat_urban.extra_mask_deg)):
            if not 0.0 <= m <= 90.0:
                raise ValueError(f"{name} must lie in [0, 90]")
        if self.haps_los.el_scale_deg <= 0:
            raise ValueError("haps_el_scale_deg must be > 0")


DEFAULT_LOS = LosModelConfig()


def gnb_los_probability(d2d_m):
    """LOS probability of a gNB link versus horizontal distance (UMi street canyon form).

    Accepts scalars or arrays.
    """
    d = np.asarray(d2d_m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = (GNB_LOS_BREAKPOINT_M / d
               + np.exp(-d / GNB_LOS_DECAY_M) * (1.0 - GNB_LOS_BREAKPOINT_M / d))
    p = np.where(d <= GNB_LOS_BREAKPOINT_M, 1.0, far)
    return float(p) if p.ndim == 0 else p


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def haps_los_probability(el_deg, region: Region, cfg: LosModelConfig = DEFAULT_LOS):
    """Elevation-logistic LOS stand-in for HAPS links.

    Zero below the mask; above it a logistic ramp centred on the mask,
    normalised so the region's ceiling is reached exactly at zenith.
    """
    el = np.asarray(el_deg, dtype=float)
    h = cfg.haps_los
    ceiling = h.p_los_suburban if Region(region) is Region.SUBURBAN else h.p_los_urban
    mask = cfg.elevation_mask_deg
    ramp = _logistic((el - mask) / h.el_scale_deg) / _logistic((90.0 - mask) / h.el_scale_deg)
    p = np.where(el < mask, 0.0, ceiling * np.minimum(ramp, 1.0))
    return float(p) if p.ndim == 0 else p


def satellite_visibility_probability(el_deg, region: Region, cfg: LosModelConfig = DEFAULT_LOS):
    el = np.asarray(el_deg, dtype=float)
    mask = cfg.elevation_mask_deg
    if Region(region) is Region.URBAN:
        s = cfg.sat_urban
        if s.extra_mask_deg > 0:
            frac = np.clip((el - mask) / s.extra_mask_deg, 0.0, 1.0)
        else:
            frac = np.ones_like(el)
        p_vis = 1.0 - s.p_blocked_at_mask * (1.0 - frac)
    else:
        p_vis = np.ones_like(el)
    p = np.where(el < mask, 0.0, p_vis)
    return float(p) if p.ndim == 0 else p


def satellite_visible(el_deg: float, az_deg: float, region: Region, rng: np.random.Generator,
                      cfg: LosModelConfig = DEFAULT_LOS) -> bool:
    """One Bernoulli draw of the urban elevation-band blockage model.

    ``az_deg`` is accepted for interface symmetry; the band model is
    azimuth independent.  Exactly one uniform is consumed per call.
    """
    u = rng.random()
    return bool(u < satellite_visibility_probability(el_deg, region, cfg))


def los_probabilities(kinds, el_deg: np.ndarray, d2d_m: np.ndarray,
                      region: Region, cfg: LosModelConfig = DEFAULT_LOS) -> np.ndarray:
    """Kind-specific LOS probability per source (``kinds``: SourceKind members or their values)."""
    kinds = np.array([SourceKind(k).value for k in kinds], dtype=str)
    p = np.zeros(len(kinds))
    is_gps = kinds == SourceKind.GPS.value
    is_haps = kinds == SourceKind.HAPS.value
    is_gnb = kinds == SourceKind.GNB.value
    if is_gps.any():
        p[is_gps] = satellite_visibility_probability(el_deg[is_gps], region, cfg)
    if is_haps.any():
        p[is_haps] = haps_los_probability(el_deg[is_haps], region, cfg)
    if is_gnb.any():
        # No elevation mask for terrestrial links.
        p[is_gnb] = gnb_los_probability(d2d_m[is_gnb])
    return p


@dataclass(frozen=True)
class VisibleSource:
    source: SourceState
    el_deg: float
    az_deg: float
    range_m: float


def sample_visibility(sources: Sequence[SourceState], receiver: EcefCoord,
                      receiver_lla: GeodeticCoord, region: Region, rng: np.random.Generator,
                      cfg: LosModelConfig = DEFAULT_LOS) -> list[VisibleSource]:
    """Keep each source whose LOS draw succeeds.

    One uniform is drawn per source, in list order, whether or not the
    source can be visible, so the stream position never depends on geometry.
    """
    if not sources:
        return []
    positions = np.array([s.position.as_array() for s in sources])
    el, az, rng_m, ned = elevation_azimuth_many(receiver.as_array(), ned_rotation(receiver_lla), positions)
    d2d = np.hypot(ned[:, 0], ned[:, 1])
    p = los_probabilities([s.kind for s in sources], el, d2d, region, cfg)
    u = rng.random(len(sources))
    return [VisibleSource(s, float(el[i]), float(az[i]), float(rng_m[i]))
            for i, s in enumerate(sources) if u[i] < p[i]]


def gnb_elevation_deg(height_diff_m: float, baseline_m: float) -> float:
    return math.degrees(math.atan2(height_diff_m, baseline_m))
