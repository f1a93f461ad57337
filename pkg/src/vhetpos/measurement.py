"""Pseudorange synthesis with a lumped Gaussian error per source kind and region.

Every error term of the full satellite, HAPS and gNB pseudorange
equations (orbit or platform position error, ionosphere, troposphere,
multipath, receiver noise) is carried by one zero-mean Gaussian with the
standard deviation held in :class:`SigmaTable`.  Source clock offsets
enter through ``SourceState.clock_offset_m`` and are zero in simulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geodesy import EcefCoord
from .sources import SourceKind, SourceState
from .visibility import Region, VisibleSource

SIGMA_FLOOR_M = 0.01


@dataclass(frozen=True)
class ErrorBudget:
    """Where each physical error term lives in the simulation."""

    sigma_p_m: float
    source_clock_offset_m: float = 0.0

    LUMPED_TERMS = {
        SourceKind.GPS: ("orbit", "ionosphere", "troposphere", "multipath", "receiver noise"),
        SourceKind.HAPS: ("platform position", "troposphere", "multipath", "receiver noise"),
        SourceKind.GNB: ("multipath", "receiver noise"),
    }


@dataclass(frozen=True)
class ReceiverClock:
    dt_m: float = 1.0e5
    drift_m_per_s: float = 0.5


@dataclass(frozen=True)
class SigmaTable:
    gps_suburban: float = 3.0
    gps_urban: float = 7.0
    haps_suburban: float = 2.0
    haps_urban: float = 5.0
    gnb: float = 0.5
    floor: float = SIGMA_FLOOR_M

    def __post_init__(self):
        for name in ("gps_suburban", "gps_urban", "haps_suburban", "haps_urban", "gnb"):
            if getattr(self, name) < 0:
                raise ValueError(f"sigma {name} must be >= 0")
        if self.floor <= 0:
            raise ValueError("sigma floor must be > 0")

    def sigma(self, kind: SourceKind, region: Region) -> float:
        kind = SourceKind(kind)
        if kind is SourceKind.GNB:
            return self.gnb
        urban = Region(region) is Region.URBAN
        if kind is SourceKind.GPS:
            return self.gps_urban if urban else self.gps_suburban
        return self.haps_urban if urban else self.haps_suburban


@dataclass(frozen=True)
class PseudorangeMeasurement:
    kind: SourceKind
    id: str
    epoch_s: float
    pr_m: float
    sigma_m: float
    source_pos: EcefCoord
    true_range_m: float
    los: bool = True

    @property
    def key(self) -> str:
        return f"{self.kind.value}:{self.id}"


def synthesize(source: SourceState, receiver_truth: EcefCoord, clock: ReceiverClock, sigma_m: float,
               rng: np.random.Generator, epoch_s: float = 0.0,
               sigma_floor: float = SIGMA_FLOOR_M) -> PseudorangeMeasurement:
    """One pseudorange: range + receiver clock + N(0, sigma) - source clock.

    A normal deviate is drawn even when ``sigma_m`` is zero; the stored
    weighting sigma is floored at ``sigma_floor``.
    """
    if sigma_m < 0:
        raise ValueError("sigma_m must be >= 0")
    rho = float(np.linalg.norm(source.position.as_array() - receiver_truth.as_array()))
    noise = sigma_m * rng.standard_normal()
    pr = rho + clock.dt_m + noise - source.clock_offset_m
    return PseudorangeMeasurement(source.kind, source.id, epoch_s, pr, max(sigma_m, sigma_floor),
                                  source.position, rho, True)


def advance_clock(clock: ReceiverClock, dt_s: float, rng: np.random.Generator) -> ReceiverClock:
    if dt_s <= 0:
        raise ValueError("dt_s must be > 0")
    step = clock.drift_m_per_s * math.sqrt(dt_s) * rng.standard_normal()
    return replace(clock, dt_m=clock.dt_m + step)


def batch_synthesize(visible: Sequence[VisibleSource], receiver_truth: EcefCoord, clock: ReceiverClock,
                     sigmas: SigmaTable, region: Region, rng: np.random.Generator,
                     epoch_s: float = 0.0) -> list[PseudorangeMeasurement]:
    return [synthesize(v.source, receiver_truth, clock, sigmas.sigma(v.source.kind, region), rng,
                       epoch_s=epoch_s, sigma_floor=sigmas.floor)
            for v in visible]
