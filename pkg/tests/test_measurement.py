import math

import numpy as np
import pytest

from vhetpos.geodesy import EcefCoord, lla_to_ecef
from vhetpos.measurement import (
    SIGMA_FLOOR_M,
    ReceiverClock,
    SigmaTable,
    advance_clock,
    batch_synthesize,
    synthesize,
)
from vhetpos.sources import SourceKind, SourceState
from vhetpos.visibility import Region, VisibleSource

from conftest import OTTAWA, place

RX = lla_to_ecef(OTTAWA)
SRC = SourceState(SourceKind.HAPS, "H1", EcefCoord.from_array(place(OTTAWA, 40, 30, 3.0e4)), 0.0)


def test_noiseless_pseudorange_is_range_plus_clock():
    m = synthesize(SRC, RX, ReceiverClock(dt_m=123.0), 0.0, np.random.default_rng(0))
    assert m.true_range_m == pytest.approx(3.0e4, abs=1e-6)
    assert m.pr_m == m.true_range_m + 123.0
    assert m.sigma_m == SIGMA_FLOOR_M
    assert m.key == "haps:H1"


def test_source_clock_offset_is_subtracted():
    src = SourceState(SourceKind.GPS, "G01", SRC.position, 7.5)
    m = synthesize(src, RX, ReceiverClock(dt_m=0.0), 0.0, np.random.default_rng(0))
    assert m.pr_m == pytest.approx(m.true_range_m - 7.5)


def test_zero_sigma_still_consumes_a_normal():
    a, b = np.random.default_rng(9), np.random.default_rng(9)
    synthesize(SRC, RX, ReceiverClock(), 0.0, a)
    b.standard_normal()
    assert a.random() == b.random()


def test_noise_statistics():
    rng = np.random.default_rng(42)
    sigma = 5.0
    err = np.array([synthesize(SRC, RX, ReceiverClock(0.0), sigma, rng).pr_m for _ in range(20000)]) \
        - synthesize(SRC, RX, ReceiverClock(0.0), 0.0, rng).true_range_m
    assert abs(err.mean()) < 4 * sigma / math.sqrt(len(err))
    assert err.std(ddof=1) == pytest.approx(sigma, rel=0.03)


def test_clock_random_walk_variance():
    rng = np.random.default_rng(1)
    c0 = ReceiverClock(dt_m=0.0, drift_m_per_s=0.5)
    steps = np.array([advance_clock(c0, 4.0, rng).dt_m for _ in range(20000)])
    assert steps.std(ddof=1) == pytest.approx(0.5 * 2.0, rel=0.03)
    with pytest.raises(ValueError):
        advance_clock(c0, 0.0, rng)


def test_sigma_table_lookup():
    t = SigmaTable()
    assert t.sigma(SourceKind.GPS, Region.URBAN) == 7.0
    assert t.sigma(SourceKind.GPS, Region.SUBURBAN) == 3.0
    assert t.sigma(SourceKind.HAPS, Region.SUBURBAN) == 2.0
    assert t.sigma(SourceKind.HAPS, Region.URBAN) == 5.0
    assert t.sigma(SourceKind.GNB, Region.URBAN) == t.sigma(SourceKind.GNB, Region.SUBURBAN) == 0.5
    with pytest.raises(ValueError):
        SigmaTable(gnb=-1.0)


def test_batch_uses_region_sigma():
    vis = [VisibleSource(SRC, 40.0, 30.0, 3.0e4),
           VisibleSource(SourceState(SourceKind.GNB, "N1", EcefCoord.from_array(place(OTTAWA, 10, 0, 80)), 0.0),
                         10.0, 0.0, 80.0)]
    out = batch_synthesize(vis, RX, ReceiverClock(), SigmaTable(gnb=0.0), Region.URBAN, np.random.default_rng(0))
    assert [m.sigma_m for m in out] == [5.0, SIGMA_FLOOR_M]
