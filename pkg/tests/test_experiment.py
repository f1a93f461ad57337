import dataclasses
import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vhetpos import data_path
from vhetpos.cli import main
from vhetpos.errors import ConfigError, EmptyInput, ParseError
from vhetpos.experiment import load_scenario
from vhetpos.experiment.config import combo_label, parse_combo, parse_combos
from vhetpos.experiment.outputs import CDF_HEADER, EPOCH_HEADER, emit_outputs
from vhetpos.experiment.runner import (
    compare_systems,
    run_scenario,
    simulate,
    summarize,
    visibility_counts,
    worker_count,
)
from vhetpos.experiment.stats import availability_stats, cdf, improvement, percentile
from vhetpos.experiment.trajectory import load_trajectory, synthetic_drive, write_trajectory
from vhetpos.sources import SourceKind

PAPER = ["gps", "gps-haps", "gps-gnb", "gps-haps-gnb"]


def write_ini(path, body):
    path.write_text(body, encoding="utf-8")
    return path


@pytest.fixture
def short_scenario(tmp_path):
    """Forty epochs of the bundled drive straddling the 380 s boundary."""
    pts = [p for p in load_trajectory(data_path("trajectory.csv")) if 360 <= p.epoch_s < 400]
    write_trajectory(pts, tmp_path / "short.csv")
    d = data_path("")
    ini = f"""[scenario]
trajectory = short.csv
almanac = {d}/almanac.yuma
haps_sites = {d}/haps_sites.csv
gnb_sites = {d}/gnb_40.csv
systems = gps,haps,gnb
combos = gps;gps+haps;gps+gnb;gps+haps+gnb
trials = 2
master_seed = 7
gps_week = 2250
gps_seconds = 400000
"""
    return write_ini(tmp_path / "short.ini", ini)


# ---- statistics -------------------------------------------------------------

def test_cdf_examples():
    assert cdf([3]) == [(3.0, 1.0)]
    assert [f for _, f in cdf([1, 2, 2, 4])] == [0.25, 0.5, 0.75, 1.0]
    assert [v for v, _ in cdf([4, 1, 2, 2])] == [1, 2, 2, 4]
    with pytest.raises(EmptyInput):
        cdf([])


def test_percentile_examples():
    assert percentile(range(1, 101), 90) == 90
    assert percentile([5, 1, 3], 50) == 3
    assert percentile([7.5], 1) == percentile([7.5], 100) == 7.5
    with pytest.raises(EmptyInput):
        percentile([], 50)
    with pytest.raises(ValueError):
        percentile([1.0], 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=300), st.integers(1, 100))
def test_percentile_is_cdf_inverse(values, p):
    pairs = cdf(values)
    first = next(v for v, f in pairs if f >= p / 100 - 1e-12)
    assert percentile(values, p) == first


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=200))
def test_percentiles_monotone_in_level(values):
    assert percentile(values, 50) <= percentile(values, 90) <= percentile(values, 95)


def test_availability_examples():
    assert availability_stats([0, 1, 2]) == (1.0, 1.0)
    assert availability_stats([0, 0, 0]) == (0.0, 0.0)
    with pytest.raises(EmptyInput):
        availability_stats([])


def test_improvement():
    assert improvement(10.0, 5.0) == 0.5
    assert improvement(10.0, 12.0) == pytest.approx(-0.2)
    assert improvement(0.0, 0.0) == 0.0


# ---- configuration ----------------------------------------------------------

def test_minimal_config_fills_defaults(caplog):
    with caplog.at_level(logging.INFO):
        cfg = load_scenario(data_path("minimal_gps.ini"))
    assert cfg.systems == (SourceKind.GPS,)
    assert cfg.trials == 20 and cfg.epoch_rate_hz == 1.0 and cfg.region_boundary_epoch_s == 380
    assert cfg.los_config.elevation_mask_deg == 15.0
    assert cfg.sigma_table.gnb == 0.5
    assert cfg.raim_config.alpha_global == 0.001 and not cfg.raim_enabled
    assert cfg.combos == ((SourceKind.GPS,),)
    assert "default scenario.trials = 20" in caplog.text


def test_bundled_paper_config():
    cfg = load_scenario(data_path("paper_40gnb.ini"))
    cat = cfg.load_catalog()
    assert len(cat.haps) == 6 and len(cat.gnbs) == 40
    assert cfg.region_boundary_epoch_s == 380
    assert [combo_label(c) for c in cfg.combos] == PAPER


def test_gnb_sites_are_nested():
    ids = [load_scenario(data_path(f"paper_{n}gnb.ini")).load_catalog().gnbs for n in (20, 30, 40)]
    assert ids[0] == ids[1][:20] == ids[2][:20]
    assert ids[1] == ids[2][:30]


@pytest.mark.parametrize("patch,field", [
    ("trials = 0", "scenario.trials"),
    ("trials = many", "scenario.trials"),
    ("colour = red", "scenario.colour"),
])
def test_config_errors(tmp_path, patch, field):
    d = data_path("")
    body = f"[scenario]\ntrajectory = {d}/trajectory.csv\nalmanac = {d}/almanac.yuma\n" \
           f"systems = gps\ngps_week = 2250\ngps_seconds = 400000\n{patch}\n"
    with pytest.raises(ConfigError) as err:
        load_scenario(write_ini(tmp_path / "bad.ini", body))
    assert field in str(err.value)
    if patch == "trials = 0":
        assert "trials ≥ 1" in str(err.value)


def test_config_missing_file_and_section(tmp_path):
    d = data_path("")
    body = f"[scenario]\ntrajectory = nowhere.csv\nalmanac = {d}/almanac.yuma\n" \
           "systems = gps\ngps_week = 2250\ngps_seconds = 400000\n"
    with pytest.raises(ConfigError):
        load_scenario(write_ini(tmp_path / "a.ini", body))
    with pytest.raises(ConfigError):
        load_scenario(write_ini(tmp_path / "b.ini", body.replace("nowhere.csv", f"{d}/trajectory.csv")
                                + "[weather]\nrain = 1\n"))
    with pytest.raises(ConfigError):
        # gNB combo without a gNB site file
        load_scenario(write_ini(tmp_path / "c.ini", body.replace("nowhere.csv", f"{d}/trajectory.csv")
                                .replace("systems = gps", "systems = gps,gnb")))
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "absent.ini")


def test_combo_parsing():
    assert parse_combo("gnb+gps") == (SourceKind.GPS, SourceKind.GNB)
    assert parse_combo("gps,haps") == (SourceKind.GPS, SourceKind.HAPS)
    assert combo_label(parse_combo("gps+haps+gnb")) == "gps-haps-gnb"
    assert len(parse_combos("gps;gps+gnb")) == 2
    for bad in ("", "gps+galileo"):
        with pytest.raises(ConfigError):
            parse_combo(bad)


# ---- trajectory --------------------------------------------------------------

def test_synthetic_drive_shape():
    pts = synthetic_drive()
    assert 650 <= len(pts) <= 750
    assert all(b.epoch_s > a.epoch_s for a, b in zip(pts, pts[1:]))


def test_trajectory_must_increase(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("epoch_s,lat_deg,lon_deg,height_m\n0,45,-75,2\n0,45,-75,2\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_trajectory(f)


# ---- pipeline ---------------------------------------------------------------

def test_region_split_and_record_contract(short_scenario):
    cfg = load_scenario(short_scenario)
    run = simulate(cfg, workers=1)
    for label in PAPER:
        for trial in run.records[label]:
            assert len(trial) == 40
            for rec in trial:
                assert rec.region.value == ("suburban" if rec.epoch_s < 380 else "urban")
                assert (rec.horizontal_m is not None) == rec.fix == (rec.vdop is not None)
    stats = summarize(run)
    for cs in stats.combos.values():
        for reg, axes in cs.samples.items():
            for v in axes.values():
                assert np.all(np.diff(v) >= 0)


def test_common_random_numbers_across_combos(short_scenario):
    cfg = load_scenario(short_scenario)
    run = simulate(cfg, workers=1)
    for t in range(cfg.trials):
        full = run.records["gps-haps-gnb"][t]
        for label in ("gps", "gps-haps", "gps-gnb"):
            for a, b in zip(run.records[label][t], full):
                assert a.n_gps == b.n_gps
                assert a.n_gnb in (0, b.n_gnb) and a.n_haps in (0, b.n_haps)


def test_duplicate_combo_gives_identical_columns(short_scenario):
    cfg = load_scenario(short_scenario)
    rep = compare_systems(cfg, [parse_combo("gps+gnb"), parse_combo("gps+gnb"), parse_combo("gps")], workers=1)
    assert list(rep.stats.combos) == ["gps-gnb", "gps"]
    alone = compare_systems(cfg, [parse_combo("gps+gnb")], workers=1)
    assert rep.run.records["gps-gnb"] == alone.run.records["gps-gnb"]


def test_adding_sources_never_loses_fix_availability(short_scenario):
    run = simulate(load_scenario(short_scenario), workers=1)
    for t in range(2):
        for a, b in zip(run.records["gps"][t], run.records["gps-haps-gnb"][t]):
            assert (b.n_gps + b.n_haps + b.n_gnb >= 4) >= (a.n_gps >= 4)
    stats = summarize(run)
    for reg in ("suburban", "urban", "all"):
        assert stats.combos["gps-haps-gnb"].fix_availability[reg] >= stats.combos["gps"].fix_availability[reg]


def test_three_satellites_gives_no_fix(short_scenario):
    cfg = dataclasses.replace(load_scenario(short_scenario),
                              los_config=dataclasses.replace(load_scenario(short_scenario).los_config,
                                                             elevation_mask_deg=60.0))
    records, stats = run_scenario(cfg, (SourceKind.GPS,), workers=1)
    thin = [r for trial in records for r in trial if r.n_gps < 4]
    assert thin and not any(r.fix for r in thin)


def test_run_scenario_is_deterministic(short_scenario):
    cfg = load_scenario(short_scenario)
    a = run_scenario(cfg, workers=1)
    b = run_scenario(cfg, workers=2)
    assert a[0] == b[0]
    assert a[1].combos.keys() == b[1].combos.keys()


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("VHETPOS_THREADS", "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    assert worker_count(10, workers=1) == 1


# ---- outputs ----------------------------------------------------------------

def test_emit_outputs_empty(tmp_path):
    paths = emit_outputs({"gps": [[]]}, None, tmp_path)
    assert (tmp_path / "epochs_gps_0.csv").read_text() == EPOCH_HEADER + "\n"
    assert (tmp_path / "cdf_gps_urban_vertical.csv").read_text() == CDF_HEADER + "\n"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["percentiles"] == {}
    assert len(paths) == 1 + 4 + 1


def test_emit_outputs_shape_and_format(short_scenario, tmp_path):
    cfg = load_scenario(short_scenario)
    run = simulate(cfg, workers=1)
    stats = summarize(run)
    emit_outputs(run.records, stats, tmp_path, cfg.echo())
    summary = json.loads((tmp_path / "summary.json").read_text())
    block = summary["percentiles"]
    assert sorted(block) == sorted(PAPER)
    assert all(sorted(block[c]) == ["suburban", "urban"] for c in PAPER)
    assert all(sorted(block[c][r]) == ["horizontal", "vertical"] for c in PAPER for r in ("suburban", "urban"))
    assert summary["seeds"]["master_seed"] == 7
    assert "gps->gps-gnb" in summary["improvement_p90"]
    raw = (tmp_path / "epochs_gps-gnb_1.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == EPOCH_HEADER and len(lines) == 41
    for cell in lines[1].split(","):
        if cell and "." in cell:
            digits = cell.replace("-", "").replace(".", "").split("e")[0].lstrip("0")
            assert len(digits) <= 6
    cdf_lines = (tmp_path / "cdf_gps_suburban_horizontal.csv").read_text().splitlines()
    assert cdf_lines[0] == CDF_HEADER
    assert float(cdf_lines[-1].split(",")[1]) == 1.0


# ---- CLI --------------------------------------------------------------------

def test_cli_los_table(capsys):
    assert main(["los-table", "--max-d", "40"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "d2d_m,p_los"
    table = dict(line.split(",") for line in lines[1:])
    assert table["18"] == "1.000000" and table["36"] == "0.683940"
    assert len(lines) == 42


def test_cli_gen_trajectory(tmp_path):
    out = tmp_path / "drive.csv"
    assert main(["gen-trajectory", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "epoch_s,lat_deg,lon_deg,height_m"
    assert len(load_trajectory(out)) == len(synthetic_drive())


def test_cli_run_and_compare(short_scenario, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--scenario", str(short_scenario), "--out", str(out), "--systems", "gps,gnb",
                 "--seed", "3", "--raim", "on", "--trials", "1", "--workers", "1"]) == 0
    assert (out / "epochs_gps-gnb_0.csv").exists()
    assert (out / "figures").is_dir()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["master_seed"] == 3 and summary["config"]["raim"]["enabled"] is True
    out2 = tmp_path / "cmp"
    assert main(["compare", "--scenario", str(short_scenario), "--combos", "gps;gps+haps",
                 "--out", str(out2), "--no-figures", "--trials", "1", "--workers", "1"]) == 0
    assert sorted(p.name for p in out2.glob("epochs_*")) == ["epochs_gps-haps_0.csv", "epochs_gps_0.csv"]
    assert "combo,region,axis" in capsys.readouterr().out


def test_cli_exit_codes(short_scenario, tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "missing.ini")]) == 1
    assert main(["run", "--scenario", str(short_scenario), "--trials", "0"]) == 1
    assert main(["compare", "--scenario", str(short_scenario), "--combos", "gps+glonass"]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--scenario", str(short_scenario), "--out", str(blocker / "sub"),
                 "--trials", "1", "--workers", "1", "--no-figures"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2


def test_visibility_counts_match_simulation(short_scenario):
    cfg = load_scenario(short_scenario)
    run = simulate(cfg, workers=1)
    assert np.array_equal(visibility_counts(cfg, run.geometry), run.world_counts)
