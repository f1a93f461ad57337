"""Plot-ready CSV files and the JSON run summary."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

from ..errors import VhetposError
from .runner import AXES, REGIONS, EpochRecord, RunStatistics
from .stats import PERCENTILE_LEVELS

EPOCH_HEADER = ("epoch_s,lat_deg,lon_deg,height_m,n_gps,n_haps,n_gnb,fix,"
                "h_err_m,v_err_m,hdop,vdop,raim_excluded")
CDF_HEADER = "value_m,fraction"


def fmt(x) -> str:
    """Six significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{x:.6g}"


def round6(obj: Any) -> Any:
    """Recursively round floats to six significant digits for JSON output."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.6g}")
    if isinstance(obj, Mapping):
        return {str(k): round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round6(v) for v in obj]
    if hasattr(obj, "item"):
        return round6(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write(path: Path, lines: Sequence[str]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise VhetposError(f"cannot write {path}: {exc}") from exc


def epoch_rows(records: Sequence[EpochRecord]) -> list[str]:
    rows = [EPOCH_HEADER]
    for r in records:
        g = r.truth
        rows.append(",".join([
            fmt(r.epoch_s), fmt(g.lat_deg), fmt(g.lon_deg), fmt(g.height_m),
            fmt(r.n_gps), fmt(r.n_haps), fmt(r.n_gnb), fmt(r.fix),
            fmt(r.horizontal_m), fmt(r.vertical_m), fmt(r.hdop), fmt(r.vdop), fmt(r.raim_excluded),
        ]))
    return rows


def summary_dict(stats: RunStatistics, config_echo: Mapping[str, Any] | None = None) -> dict[str, Any]:
    cfg = dict(config_echo or {})
    return round6({
        "config": cfg,
        "seeds": {
            "master_seed": cfg.get("master_seed"),
            "trials": cfg.get("trials"),
            "substreams": "SeedSequence(master_seed, spawn_key=(trial, epoch_index)) -> los, noise, clock, fault",
        },
        "percentiles": {
            label: {reg: {axis: {f"p{p}": cs.percentiles[reg][axis][p] for p in PERCENTILE_LEVELS}
                          for axis in AXES} for reg in cs.percentiles}
            for label, cs in stats.combos.items()
        },
        "fix_availability": {label: cs.fix_availability for label, cs in stats.combos.items()},
        "solution_rate": {label: cs.solution_rate for label, cs in stats.combos.items()},
        "availability": {
            kind: {reg: (None if v is None else {"mean": v[0], "median": v[1]}) for reg, v in by_region.items()}
            for kind, by_region in stats.availability.items()
        },
        "improvement_p90": stats.improvements,
    })


def emit_outputs(records: Mapping[str, Sequence[Sequence[EpochRecord]]], stats: RunStatistics | None,
                 out_dir: str | Path, config_echo: Mapping[str, Any] | None = None) -> list[Path]:
    """Write per-trial epoch CSVs, per-combo CDF CSVs, and ``summary.json``.

    Returns the written paths in a deterministic order.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise VhetposError(f"cannot create {out}: {exc}") from exc
    written = []
    for label, trials in records.items():
        for t, trial in enumerate(trials):
            path = out / f"epochs_{label}_{t}.csv"
            _write(path, epoch_rows(trial))
            written.append(path)
        for reg in (r.value for r in REGIONS):
            for axis in AXES:
                samples = stats.combos[label].samples[reg][axis] if stats and label in stats.combos else []
                n = len(samples)
                lines = [CDF_HEADER] + [f"{fmt(float(v))},{fmt((i + 1) / n)}" for i, v in enumerate(samples)]
                path = out / f"cdf_{label}_{reg}_{axis}.csv"
                _write(path, lines)
                written.append(path)
    empty = RunStatistics({}, {}, {})
    summary = summary_dict(stats or empty, config_echo)
    path = out / "summary.json"
    _write(path, [json.dumps(summary, indent=2, sort_keys=True)])
    written.append(path)
    return written
