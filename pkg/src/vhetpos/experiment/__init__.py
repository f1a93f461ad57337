from .config import FaultInjection, ScenarioConfig, combo_label, load_scenario, parse_combo, parse_combos
from .runner import (
    ComparisonReport,
    EpochRecord,
    RunStatistics,
    ScenarioRun,
    compare_systems,
    run_scenario,
    simulate,
    summarize,
    visibility_counts,
)
from .outputs import emit_outputs
from .stats import availability_stats, cdf, improvement, percentile
from .trajectory import TrajectoryPoint, load_trajectory, synthetic_drive, write_trajectory

__all__ = [
    "ComparisonReport", "EpochRecord", "FaultInjection", "RunStatistics", "ScenarioConfig", "ScenarioRun",
    "TrajectoryPoint", "availability_stats", "cdf", "combo_label", "compare_systems", "emit_outputs",
    "improvement", "load_scenario", "load_trajectory", "parse_combo", "parse_combos", "percentile",
    "run_scenario", "simulate", "summarize", "synthetic_drive", "visibility_counts",
    "write_trajectory",
]
