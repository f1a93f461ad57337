"""Single-point positioning by iterated weighted least squares, and DOP."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientMeasurements, NoConvergence, SingularGeometry
from .geodesy import EcefCoord, GeodeticCoord, ned_rotation
from .measurement import PseudorangeMeasurement

MAX_CONDITION = 1e12
WEIGHTING_MODES = ("inverse_variance", "uniform")
# Weight spread above which the solve runs as a continuation in capped weights.
STIFF_WEIGHT_RATIO = 1e3
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GeometryMatrix:
    """Rows ``[-u_x, -u_y, -u_z, 1]`` with u the unit receiver-to-source vector."""

    rows: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class PositionFix:
    position: EcefCoord
    clock_m: float
    iterations: int
    converged: bool
    residuals_m: np.ndarray
    cofactor_4x4: np.ndarray
    used_ids: tuple[str, ...]
    geometry: GeometryMatrix
    last_step_m: float


@dataclass(frozen=True)
class DopValues:
    hdop: float
    vdop: float
    pdop: float
    tdop: float
    ned_cofactor: np.ndarray


@dataclass(frozen=True)
class NedError:
    horizontal_m: float
    vertical_m: float


def geometry_rows(position: np.ndarray, source_positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Geometry rows and predicted geometric ranges at a linearization point."""
    delta = source_positions - position
    ranges = np.linalg.norm(delta, axis=1)
    h = np.empty((len(ranges), 4))
    h[:, :3] = -delta / ranges[:, None]
    h[:, 3] = 1.0
    return h, ranges


def measurement_weights(sigmas: np.ndarray, weighting: str = "inverse_variance") -> np.ndarray:
    if weighting == "inverse_variance":
        return 1.0 / sigmas ** 2
    if weighting == "uniform":
        # Equal weights, scaled by the mean variance so residual tests stay in sigma units.
        return np.full(len(sigmas), 1.0 / np.mean(sigmas ** 2))
    raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTING_MODES}")


def _checked_inverse(normal: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(normal)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularGeometry(f"normal matrix condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    return np.linalg.inv(normal)


def _weighted_cost(x, clock, source_positions, pseudoranges, weights) -> float:
    ranges = np.linalg.norm(source_positions - x, axis=1)
    v = pseudoranges - ranges - clock
    return float(weights @ (v * v))


def solve_arrays(source_positions: np.ndarray, pseudoranges: np.ndarray, weights: np.ndarray,
                 init_position=None, init_clock: float = 0.0, tol_m: float = 1e-4,
                 max_iter: int = 20):
    """Weighted least-squares position and clock on raw arrays.

    When the weights span more than ``STIFF_WEIGHT_RATIO`` (a gNB at the
    0.01 m sigma floor next to metre-level satellites), the stiff ranges
    confine the iterates to thin curved valleys around the gNB spheres and
    a direct solve crawls or lands in the mirror basin across the gNB
    height plane.  The solve then starts with every weight capped at the
    smallest one and raises the cap by that ratio per stage, warm-starting
    each stage, until the true weights apply.  ``max_iter`` holds per
    stage; the returned iteration count is the total.

    Returns ``(x, clock, iterations, step_norm, H, residuals, cofactor)``
    with every quantity evaluated at the final estimate.
    """
    m = len(pseudoranges)
    if m < 4:
        raise InsufficientMeasurements(f"{m} measurements; at least 4 are required")
    w_min, w_max = float(weights.min()), float(weights.max())
    cap = w_min if w_max > STIFF_WEIGHT_RATIO * w_min else w_max
    x, clock, total = init_position, init_clock, 0
    while True:
        x, clock, it, step, h, v, q = _damped_newton(
            source_positions, pseudoranges, np.minimum(weights, cap), x, clock, tol_m, max_iter)
        total += it
        if cap >= w_max:
            return x, clock, total, step, h, v, q
        cap = min(cap * STIFF_WEIGHT_RATIO, w_max)


def _damped_newton(source_positions: np.ndarray, pseudoranges: np.ndarray, weights: np.ndarray,
                   init_position=None, init_clock: float = 0.0, tol_m: float = 1e-4,
                   max_iter: int = 20):
    """Damped Gauss-Newton core.

    Each iteration takes the Gauss-Newton step, upgraded to a full Newton
    step when the exact Hessian (including range curvature) is positive
    definite, and halves it until the weighted cost decreases.  Plain
    Gauss-Newton diverges when a nearby, tightly weighted source (a gNB
    tens of metres away) makes range curvature comparable to the
    information in the remaining directions.  Steps whose predicted
    decrease is below the cost's rounding noise are taken in full.
    Conditioning is checked at the first iterate and at the solution.
    """
    x = np.zeros(3) if init_position is None else np.array(init_position, dtype=float)
    clock = float(init_clock)
    step_norm = math.inf
    eye = np.eye(3)
    for it in range(1, max_iter + 1):
        delta = source_positions - x
        rho = np.sqrt(np.einsum("ij,ij->i", delta, delta))
        u = delta / rho[:, None]
        h = np.empty((len(rho), 4))
        h[:, :3] = -u
        h[:, 3] = 1.0
        v = pseudoranges - (rho + clock)
        hw = h.T * weights
        normal = hw @ h
        if it == 1:
            _checked_inverse(normal)
        rhs = hw @ v
        # Exact Hessian: subtract the range curvature sum(w v (I - u u^T) / rho).
        scale = weights * v / rho
        newton = normal.copy()
        newton[:3, :3] -= eye * scale.sum() - (u.T * scale) @ u
        try:
            np.linalg.cholesky(newton)
            dx = np.linalg.solve(newton, rhs)
        except np.linalg.LinAlgError:
            try:
                dx = np.linalg.solve(normal, rhs)
            except np.linalg.LinAlgError:
                raise SingularGeometry(f"singular normal matrix at iteration {it}") from None
        step_norm = math.sqrt(dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2])
        if step_norm >= tol_m:
            # Cost differences below this are rounding noise from residuals of large pseudoranges.
            cost_noise = 8.0 * _EPS * float(weights @ np.abs(v)) * float(np.max(np.abs(pseudoranges)))
            if float(rhs @ dx) > cost_noise:
                cost0 = float(weights @ (v * v))
                t = 1.0
                while _weighted_cost(x + t * dx[:3], clock + t * dx[3],
                                     source_positions, pseudoranges, weights) > cost0:
                    t *= 0.5
                    if t < 1e-6:
                        # No decrease at any scale: the cost is at its rounding floor.
                        t = 1.0
                        break
                dx = t * dx
        x = x + dx[:3]
        clock += dx[3]
        if step_norm < tol_m:
            h, ranges = geometry_rows(x, source_positions)
            v = pseudoranges - (ranges + clock)
            q = _checked_inverse((h.T * weights) @ h)
            return x, clock, it, step_norm, h, v, q
    raise NoConvergence(f"no convergence after {max_iter} iterations (last step {step_norm:.3g} m)")


def spp_solve(meas: Sequence[PseudorangeMeasurement], init: EcefCoord | None = None,
              init_clock_m: float = 0.0, tol_m: float = 1e-4, max_iter: int = 20,
              weighting: str = "inverse_variance") -> PositionFix:
    """Estimate receiver position and clock from four or more pseudoranges.

    Linearization uses residual = observed - predicted.  The returned
    cofactor is the weighted ``(H^T W H)^-1``; residuals and geometry are
    evaluated at the solution.

    Raises
    ------
    InsufficientMeasurements
        Fewer than four measurements.
    SingularGeometry
        Normal matrix condition number above 1e12.
    NoConvergence
        Position update still above ``tol_m`` after ``max_iter`` steps.
    """
    if len(meas) < 4:
        raise InsufficientMeasurements(f"{len(meas)} measurements; at least 4 are required")
    src = np.array([m.source_pos.as_array() for m in meas])
    pr = np.array([m.pr_m for m in meas])
    w = measurement_weights(np.array([m.sigma_m for m in meas]), weighting)
    x, clock, it, step, h, v, q = solve_arrays(
        src, pr, w, None if init is None else init.as_array(), init_clock_m, tol_m, max_iter)
    return PositionFix(EcefCoord.from_array(x), clock, it, True, v, q,
                       tuple(m.key for m in meas), GeometryMatrix(h, w), step)


def dop_from_rows(rows: np.ndarray, rotation: np.ndarray) -> DopValues:
    """DOP from unweighted geometry rows and the ECEF-to-NED rotation."""
    q = _checked_inverse(rows.T @ rows)
    q_ned = rotation @ q[:3, :3] @ rotation.T
    return DopValues(
        hdop=math.sqrt(q_ned[0, 0] + q_ned[1, 1]),
        vdop=math.sqrt(q_ned[2, 2]),
        pdop=math.sqrt(np.trace(q[:3, :3])),
        tdop=math.sqrt(q[3, 3]),
        ned_cofactor=q_ned,
    )


def compute_dop(fix: PositionFix, receiver_lla: GeodeticCoord) -> DopValues:
    """Geometry-only DOP from the unweighted cofactor at the solution."""
    return dop_from_rows(fix.geometry.rows, ned_rotation(receiver_lla))


def position_errors(fix: PositionFix, truth: EcefCoord, truth_lla: GeodeticCoord) -> NedError:
    n, e, d = ned_rotation(truth_lla) @ (fix.position.as_array() - truth.as_array())
    return NedError(math.hypot(n, e), abs(d))
