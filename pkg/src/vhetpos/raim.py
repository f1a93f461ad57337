"""Residual-based integrity monitoring with iterated fault exclusion.

The global test compares the weighted sum of squared residuals with a
chi-square quantile; the local test standardizes each residual by its
own cofactor (data snooping) and nominates the worst one for exclusion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import chi2_ppf, normal_ppf
from .errors import NumericalDegeneracy, ZeroRedundancy
from .geodesy import EcefCoord
from .measurement import PseudorangeMeasurement
from .solver import GeometryMatrix, PositionFix, spp_solve

_MIN_QV_DIAG = 1e-12
_MIN_REMAINING = 5


@dataclass(frozen=True)
class RaimConfig:
    alpha_global: float = 0.001
    alpha_local: float = 0.001
    max_exclusions: int = 3
    min_redundancy_after: int = 1

    def __post_init__(self):
        for name in ("alpha_global", "alpha_local"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.max_exclusions < 0:
            raise ValueError("max_exclusions must be >= 0")
        if self.min_redundancy_after < 0:
            raise ValueError("min_redundancy_after must be >= 0")


@dataclass(frozen=True)
class RaimOutcome:
    passed: bool
    excluded_ids: tuple[str, ...]
    global_statistic: float
    global_threshold: float
    standardized_residuals: np.ndarray = field(repr=False)


def global_test(residuals, weights, dof: int, alpha: float) -> tuple[float, float, bool]:
    if dof < 1:
        raise ZeroRedundancy(f"global test needs redundancy >= 1, got {dof}")
    v = np.asarray(residuals, dtype=float)
    stat = float(np.sum(np.asarray(weights, dtype=float) * v * v))
    threshold = chi2_ppf(1.0 - alpha, int(dof))
    return stat, threshold, stat <= threshold


def local_test(residuals, geometry: GeometryMatrix, alpha: float) -> tuple[np.ndarray, int, bool]:
    """Standardized residuals, index of the largest, and whether it exceeds the normal quantile.

    Measurements whose residual cofactor is numerically zero get a
    standardized value of 0 and are never nominated.  If every
    measurement is in that state, :class:`NumericalDegeneracy` is raised.
    """
    v = np.asarray(residuals, dtype=float)
    h, w = geometry.rows, geometry.weights
    if len(v) - h.shape[1] < 1:
        raise ZeroRedundancy("local test needs redundancy >= 1")
    q = np.linalg.inv((h.T * w) @ h)
    qv_diag = 1.0 / w - np.einsum("ij,jk,ik->i", h, q, h)
    ok = qv_diag > _MIN_QV_DIAG
    if not ok.any():
        raise NumericalDegeneracy("all residual cofactors are numerically zero")
    standardized = np.zeros(len(v))
    standardized[ok] = np.abs(v[ok]) / np.sqrt(qv_diag[ok])
    # argmax returns the first maximum, which is the lowest index on ties.
    worst = int(np.argmax(np.where(ok, standardized, -1.0)))
    flagged = bool(standardized[worst] > normal_ppf(1.0 - alpha / 2.0))
    return standardized, worst, flagged


def fde_solve(meas: Sequence[PseudorangeMeasurement], init: EcefCoord | None = None,
              init_clock_m: float = 0.0, raim_cfg: RaimConfig = RaimConfig(),
              **solver_kwargs) -> tuple[PositionFix, RaimOutcome]:
    """Solve, test, and exclude the worst measurement one at a time.

    Exclusion stops once the global test passes, the exclusion budget is
    spent, or another exclusion would leave fewer than five measurements
    or less than ``min_redundancy_after`` redundancy.  With exactly four
    measurements there is nothing to test and the outcome is not passed.
    """
    current = list(meas)
    excluded: list[str] = []
    fix = spp_solve(current, init, init_clock_m, **solver_kwargs)
    while True:
        dof = len(current) - 4
        if dof < 1:
            return fix, RaimOutcome(False, tuple(excluded), math.nan, math.nan, np.zeros(len(current)))
        stat, thr, ok = global_test(fix.residuals_m, fix.geometry.weights, dof, raim_cfg.alpha_global)
        standardized, worst, _ = local_test(fix.residuals_m, fix.geometry, raim_cfg.alpha_local)
        if ok:
            return fix, RaimOutcome(True, tuple(excluded), stat, thr, standardized)
        remaining = len(current) - 1
        if (len(excluded) >= raim_cfg.max_exclusions or remaining < _MIN_REMAINING
                or remaining - 4 < raim_cfg.min_redundancy_after):
            return fix, RaimOutcome(False, tuple(excluded), stat, thr, standardized)
        excluded.append(current[worst].key)
        del current[worst]
        fix = spp_solve(current, fix.position, fix.clock_m, **solver_kwargs)
