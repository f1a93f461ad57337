"""Monte-Carlo orchestration of scenarios and system comparisons.

All randomness for trial ``t`` at epoch index ``k`` flows from
``SeedSequence(master_seed, spawn_key=(t, k))``, split into independent
streams for LOS draws, measurement noise, the receiver clock, and fault
injection.  Every epoch is simulated once for the full source catalog
and each system combination then solves on its own subset of the same
measurements, so combinations are compared under common random numbers
and results do not depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import VhetposError
from ..geodesy import EcefCoord, GeodeticCoord, ecef_to_lla, elevation_azimuth_many, lla_to_ecef_array, ned_rotation
from ..measurement import PseudorangeMeasurement, ReceiverClock, advance_clock
from ..raim import fde_solve
from ..solver import compute_dop, position_errors, spp_solve
from ..sources import KIND_ORDER, SourceCatalog, SourceKind, assemble_sources
from ..visibility import Region, los_probabilities
from .config import Combo, ScenarioConfig, combo_label
from .stats import PERCENTILE_LEVELS, availability_stats, improvement, percentile
from .trajectory import TrajectoryPoint

log = logging.getLogger(__name__)

AXES = ("horizontal", "vertical")
REGIONS = (Region.SUBURBAN, Region.URBAN)
THREADS_ENV = "VHETPOS_THREADS"


@dataclass(frozen=True)
class EpochRecord:
    epoch_s: float
    truth: GeodeticCoord
    region: Region
    n_gps: int
    n_haps: int
    n_gnb: int
    fix: bool
    horizontal_m: float | None = None
    vertical_m: float | None = None
    hdop: float | None = None
    vdop: float | None = None
    raim_excluded: int = 0


@dataclass
class Geometry:
    """Trial-independent quantities for every (epoch, source) pair."""

    epochs: np.ndarray
    truth_lla: list[GeodeticCoord]
    truth_ecef: np.ndarray
    regions: list[Region]
    kinds: np.ndarray           # kind values as str, e.g. 'gps'
    ids: list[str]
    positions: np.ndarray       # (epochs, sources, 3)
    ranges: np.ndarray          # (epochs, sources)
    p_los: np.ndarray           # (epochs, sources)
    sigma_noise: np.ndarray     # (epochs, sources) injected noise sigma
    sigma_weight: np.ndarray    # (epochs, sources) stored weighting sigma


@dataclass
class ScenarioRun:
    cfg: ScenarioConfig
    combos: tuple[Combo, ...]
    geometry: Geometry
    records: dict[str, list[list[EpochRecord]]]
    world_counts: np.ndarray    # (trials, epochs, 3) visible sources per kind, all systems


@dataclass
class ComboStatistics:
    """``fix_availability`` counts epochs with at least four usable measurements;
    ``solution_rate`` counts epochs whose solve actually converged."""

    samples: dict[str, dict[str, np.ndarray]]
    percentiles: dict[str, dict[str, dict[int, float | None]]]
    fix_availability: dict[str, float | None]
    solution_rate: dict[str, float | None]


@dataclass
class RunStatistics:
    combos: dict[str, ComboStatistics]
    availability: dict[str, dict[str, tuple[float, float] | None]]
    improvements: dict[str, dict[str, dict[str, float | None]]] = field(default_factory=dict)


def region_of(epoch_s: float, boundary_s: float) -> Region:
    return Region.SUBURBAN if epoch_s < boundary_s else Region.URBAN


def prepare_geometry(cfg: ScenarioConfig, catalog: SourceCatalog | None = None,
                     trajectory: Sequence[TrajectoryPoint] | None = None) -> Geometry:
    catalog = cfg.load_catalog() if catalog is None else catalog
    trajectory = cfg.load_trajectory() if trajectory is None else trajectory
    epochs = np.array([p.epoch_s for p in trajectory])
    truth_lla = [p.position for p in trajectory]
    truth_ecef = lla_to_ecef_array([g.lat_deg for g in truth_lla], [g.lon_deg for g in truth_lla],
                                   np.array([g.height_m for g in truth_lla]))
    regions = [region_of(t, cfg.region_boundary_epoch_s) for t in epochs]

    per_epoch = [assemble_sources(catalog, float(t)) for t in epochs]
    keys = [s.key for s in per_epoch[0]] if per_epoch else []
    for k, states in enumerate(per_epoch):
        if [s.key for s in states] != keys:
            raise VhetposError(f"source set changed at epoch {epochs[k]}; propagation failed for a source")
    kinds = np.array([s.kind.value for s in per_epoch[0]] if per_epoch else [], dtype=str)
    ids = [s.id for s in per_epoch[0]] if per_epoch else []
    n_src = len(keys)
    positions = np.array([[s.position.as_array() for s in states] for states in per_epoch]).reshape(len(epochs), n_src, 3)

    ranges = np.zeros((len(epochs), n_src))
    p_los = np.zeros((len(epochs), n_src))
    sig = np.zeros((len(epochs), n_src))
    for k in range(len(epochs)):
        if n_src == 0:
            continue
        el, _, rng_m, ned = elevation_azimuth_many(truth_ecef[k], ned_rotation(truth_lla[k]), positions[k])
        ranges[k] = rng_m
        p_los[k] = los_probabilities(kinds, el, np.hypot(ned[:, 0], ned[:, 1]), regions[k], cfg.los_config)
        sig[k] = [cfg.sigma_table.sigma(SourceKind(kind), regions[k]) for kind in kinds]
    return Geometry(epochs, truth_lla, truth_ecef, regions, kinds, ids, positions, ranges, p_los,
                    sig, np.maximum(sig, cfg.sigma_table.floor))


def epoch_streams(master_seed: int, trial: int, epoch_index: int) -> list[np.random.Generator]:
    """Independent (los, noise, clock, fault) generators for one trial epoch."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial, epoch_index))
    return [np.random.default_rng(child) for child in ss.spawn(4)]


def _kind_indices(geo: Geometry) -> np.ndarray:
    kind_index = {kind.value: i for i, kind in enumerate(KIND_ORDER)}
    return np.array([kind_index[k] for k in geo.kinds], dtype=int)


def _count_by_kind(visible: np.ndarray, kind_idx: np.ndarray) -> np.ndarray:
    return np.bincount(kind_idx[visible], minlength=len(KIND_ORDER))


def visibility_counts(cfg: ScenarioConfig, geometry: Geometry | None = None) -> np.ndarray:
    """Visible-source counts (trials, epochs, kinds) without solving.

    Uses the same LOS substreams as :func:`simulate`, so the counts equal
    its ``world_counts``.
    """
    geo = prepare_geometry(cfg) if geometry is None else geometry
    kind_idx = _kind_indices(geo)
    n_epochs, n_src = geo.ranges.shape
    out = np.zeros((cfg.trials, n_epochs, len(KIND_ORDER)), dtype=int)
    for t in range(cfg.trials):
        for k in range(n_epochs):
            los_rng = epoch_streams(cfg.master_seed, t, k)[0]
            out[t, k] = _count_by_kind(los_rng.random(n_src) < geo.p_los[k], kind_idx)
    return out


def _solve_combo(cfg: ScenarioConfig, meas: list[PseudorangeMeasurement], warm):
    init, init_clock = warm
    kwargs = dict(tol_m=cfg.tol_m, max_iter=cfg.max_iter, weighting=cfg.weighting)
    if cfg.raim_enabled:
        fix, outcome = fde_solve(meas, init, init_clock, cfg.raim_config, **kwargs)
        return fix, len(outcome.excluded_ids)
    return spp_solve(meas, init, init_clock, **kwargs), 0


def simulate_trial(cfg: ScenarioConfig, geo: Geometry, combos: Sequence[Combo], trial: int):
    """Run one trial; returns ``(records per combo label, world counts (epochs, 3))``."""
    n_epochs, n_src = geo.ranges.shape
    records: dict[str, list[EpochRecord]] = {combo_label(c): [] for c in combos}
    warm = {combo_label(c): (None, 0.0) for c in combos}
    world_counts = np.zeros((n_epochs, len(KIND_ORDER)), dtype=int)
    src_kind_idx = _kind_indices(geo)
    src_kinds = [SourceKind(k) for k in geo.kinds]
    clock = cfg.clock
    fault = cfg.fault

    for k in range(n_epochs):
        los_rng, noise_rng, clock_rng, fault_rng = epoch_streams(cfg.master_seed, trial, k)
        if k > 0:
            clock = advance_clock(clock, float(geo.epochs[k] - geo.epochs[k - 1]), clock_rng)
        # One uniform and one normal per catalog source, visible or not.
        visible = los_rng.random(n_src) < geo.p_los[k]
        pr = geo.ranges[k] + clock.dt_m + geo.sigma_noise[k] * noise_rng.standard_normal(n_src)
        if fault is not None and fault.active(float(geo.epochs[k])):
            candidates = np.flatnonzero(visible & (geo.kinds == fault.victim_kind.value))
            if len(candidates) and fault_rng.random() < fault.probability:
                pr[candidates[fault_rng.integers(len(candidates))]] += fault.bias_m
        world_counts[k] = _count_by_kind(visible, src_kind_idx)

        truth_lla = geo.truth_lla[k]
        truth = EcefCoord.from_array(geo.truth_ecef[k])
        meas = [PseudorangeMeasurement(src_kinds[i], geo.ids[i], float(geo.epochs[k]), float(pr[i]),
                                       float(geo.sigma_weight[k, i]), EcefCoord.from_array(geo.positions[k, i]),
                                       float(geo.ranges[k, i]), True)
                for i in np.flatnonzero(visible)]
        for combo in combos:
            label = combo_label(combo)
            used = [m for m in meas if m.kind in combo]
            counts = {kind: sum(1 for m in used if m.kind is kind) for kind in KIND_ORDER}
            base = dict(epoch_s=float(geo.epochs[k]), truth=truth_lla, region=geo.regions[k],
                        n_gps=counts[SourceKind.GPS], n_haps=counts[SourceKind.HAPS], n_gnb=counts[SourceKind.GNB])
            if len(used) < 4:
                records[label].append(EpochRecord(fix=False, **base))
                continue
            try:
                fix, n_excluded = _solve_combo(cfg, used, warm[label])
                dop = compute_dop(fix, ecef_to_lla(fix.position))
            except VhetposError as exc:
                log.debug("trial %d epoch %.1f %s: no fix (%s)", trial, geo.epochs[k], label, exc)
                records[label].append(EpochRecord(fix=False, **base))
                continue
            warm[label] = (fix.position, fix.clock_m)
            err = position_errors(fix, truth, truth_lla)
            records[label].append(EpochRecord(fix=True, horizontal_m=err.horizontal_m, vertical_m=err.vertical_m,
                                              hdop=dop.hdop, vdop=dop.vdop, raim_excluded=n_excluded, **base))
    return records, world_counts


def _trial_task(args):
    cfg, geo, combos, trial = args
    return simulate_trial(cfg, geo, combos, trial)


def worker_count(trials: int, workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(workers), trials))


def simulate(cfg: ScenarioConfig, combos: Sequence[Combo] | None = None, workers: int | None = None,
             geometry: Geometry | None = None) -> ScenarioRun:
    combos = tuple(dict.fromkeys(combos)) if combos else cfg.combos
    geo = prepare_geometry(cfg) if geometry is None else geometry
    tasks = [(cfg, geo, combos, t) for t in range(cfg.trials)]
    n_workers = worker_count(cfg.trials, workers)
    if n_workers == 1:
        results = [_trial_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_trial_task, tasks))
    records = {combo_label(c): [r[0][combo_label(c)] for r in results] for c in combos}
    world = np.array([r[1] for r in results]).reshape(cfg.trials, len(geo.epochs), 3)
    return ScenarioRun(cfg, combos, geo, records, world)


def _combo_statistics(trials: list[list[EpochRecord]]) -> ComboStatistics:
    samples = {r.value: {a: [] for a in AXES} for r in REGIONS}
    # region -> [epochs with >= 4 measurements, converged solves, epochs]
    tally = {r.value: [0, 0, 0] for r in REGIONS}
    for trial in trials:
        for rec in trial:
            reg = rec.region.value
            tally[reg][2] += 1
            tally[reg][0] += rec.n_gps + rec.n_haps + rec.n_gnb >= 4
            if rec.fix:
                tally[reg][1] += 1
                samples[reg]["horizontal"].append(rec.horizontal_m)
                samples[reg]["vertical"].append(rec.vertical_m)
    sorted_samples = {reg: {a: np.sort(np.array(v, dtype=float)) for a, v in axes.items()}
                      for reg, axes in samples.items()}
    pct = {reg: {a: {p: (percentile(v, p) if len(v) else None) for p in PERCENTILE_LEVELS}
                 for a, v in axes.items()} for reg, axes in sorted_samples.items()}

    def fractions(i):
        out = {reg: (t[i] / t[2] if t[2] else None) for reg, t in tally.items()}
        total = sum(t[2] for t in tally.values())
        out["all"] = sum(t[i] for t in tally.values()) / total if total else None
        return out

    return ComboStatistics(sorted_samples, pct, fractions(0), fractions(1))


def summarize(run: ScenarioRun) -> RunStatistics:
    """Per-combination CDF samples and percentiles, availability table, improvement matrix."""
    combos = {label: _combo_statistics(trials) for label, trials in run.records.items()}
    regions = np.array([r.value for r in run.geometry.regions])
    availability: dict[str, dict[str, tuple[float, float] | None]] = {}
    for i, kind in enumerate(KIND_ORDER):
        availability[kind.value] = {}
        for name, mask in (("all", np.ones(len(regions), dtype=bool)),
                           ("suburban", regions == "suburban"), ("urban", regions == "urban")):
            counts = run.world_counts[:, mask, i].ravel()
            availability[kind.value][name] = availability_stats(counts) if counts.size else None
    stats = RunStatistics(combos, availability)
    stats.improvements = improvement_matrix(stats)
    return stats


def improvement_matrix(stats: RunStatistics, level: int = 90):
    """Relative 90th-percentile reduction for every ordered pair of distinct combinations."""
    out = {}
    labels = list(stats.combos)
    for a in labels:
        for b in labels:
            if a == b:
                continue
            entry = {}
            for reg in (r.value for r in REGIONS):
                entry[reg] = {}
                for axis in AXES:
                    pa = stats.combos[a].percentiles[reg][axis][level]
                    pb = stats.combos[b].percentiles[reg][axis][level]
                    entry[reg][axis] = None if pa is None or pb is None else improvement(pa, pb)
            out[f"{a}->{b}"] = entry
    return out


def run_scenario(cfg: ScenarioConfig, systems: Combo | None = None, workers: int | None = None):
    """Run one system combination; returns ``(records per trial, RunStatistics)``."""
    combo = systems or cfg.systems
    run = simulate(cfg, (combo,), workers)
    return run.records[combo_label(combo)], summarize(run)


@dataclass
class ComparisonReport:
    run: ScenarioRun
    stats: RunStatistics

    def percentile(self, combo: Combo | str, region: str, axis: str, level: int = 90):
        label = combo if isinstance(combo, str) else combo_label(combo)
        return self.stats.combos[label].percentiles[region][axis][level]

    def improvement(self, before: Combo | str, after: Combo | str, region: str, axis: str) -> float:
        a = before if isinstance(before, str) else combo_label(before)
        b = after if isinstance(after, str) else combo_label(after)
        return improvement(self.percentile(a, region, axis), self.percentile(b, region, axis))


def compare_systems(cfg: ScenarioConfig, combos: Sequence[Combo], workers: int | None = None) -> ComparisonReport:
    if not combos:
        raise ValueError("at least one system combination is required")
    run = simulate(cfg, combos, workers)
    return ComparisonReport(run, summarize(run))
