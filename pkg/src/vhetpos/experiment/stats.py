"""Empirical CDFs, nearest-rank percentiles, and availability summaries."""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptyInput

PERCENTILE_LEVELS = (50, 90, 95)


def cdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """Sorted values paired with i/n at the i-th (1-based) value."""
    v = np.sort(np.asarray(list(values), dtype=float))
    n = len(v)
    if n == 0:
        raise EmptyInput("cdf of an empty sample")
    return [(float(x), (i + 1) / n) for i, x in enumerate(v)]


def percentile(values: Iterable[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p n / 100)-th smallest value."""
    v = np.sort(np.asarray(list(values), dtype=float))
    n = len(v)
    if n == 0:
        raise EmptyInput("percentile of an empty sample")
    if not 0.0 < p <= 100.0:
        raise ValueError(f"percentile level must be in (0, 100]: {p}")
    # Round before ceil so that e.g. 90 * 100 / 100 does not become 91.
    rank = math.ceil(round(p * n / 100.0, 9))
    return float(v[max(rank, 1) - 1])


def availability_stats(counts: Sequence[int] | np.ndarray) -> tuple[float, float]:
    """Mean and nearest-rank median of per-epoch visible-source counts."""
    c = np.asarray(counts, dtype=float)
    if c.size == 0:
        raise EmptyInput("availability statistics need at least one epoch")
    return float(c.mean()), percentile(c, 50)


def improvement(before: float, after: float) -> float:
    """Relative reduction (before - after) / before."""
    if before == 0.0:
        return 0.0 if after == 0.0 else -math.inf
    return (before - after) / before
