"""Command-line entry point: ``vhetpos run|compare|los-table|gen-trajectory``.

Exit status is 0 on success, 1 on a configuration error, 2 on any other
runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from .errors import ConfigError, VhetposError
from .experiment.config import combo_label, load_scenario, parse_combo, parse_combos
from .experiment.outputs import emit_outputs
from .experiment.runner import AXES, REGIONS, simulate, summarize
from .experiment.trajectory import synthetic_drive, write_trajectory
from .visibility import gnb_los_probability

log = logging.getLogger("vhetpos")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vhetpos", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--scenario", required=True, help="scenario INI file")
        p.add_argument("--seed", type=int, help="override scenario.master_seed")
        p.add_argument("--trials", type=int, help="override scenario.trials")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--raim", type=_on_off, help="on|off, overrides raim.enabled")
        p.add_argument("--workers", type=int, help="worker processes (default: VHETPOS_THREADS or CPU count)")
        p.add_argument("--no-figures", action="store_true", help="skip PNG report figures")

    run = sub.add_parser("run", help="simulate one system combination")
    scenario_args(run)
    run.add_argument("--systems", help="comma list, e.g. gps,haps,gnb (default: scenario.systems)")

    cmp_ = sub.add_parser("compare", help="compare system combinations under common random numbers")
    scenario_args(cmp_)
    cmp_.add_argument("--combos", help="';'-separated combos, e.g. 'gps;gps+haps;gps+gnb;gps+haps+gnb'")

    los = sub.add_parser("los-table", help="print the gNB LOS probability curve")
    los.add_argument("--max-d", type=float, default=500.0)
    los.add_argument("--step", type=float, default=1.0)

    gen = sub.add_parser("gen-trajectory", help="write the bundled synthetic suburban-to-urban drive")
    gen.add_argument("--out", required=True)
    gen.add_argument("--rate-hz", type=float, default=1.0)
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("trials", "trials ≥ 1")
        changes["trials"] = args.trials
    if args.raim is not None:
        changes["raim_enabled"] = args.raim
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _print_table(stats) -> None:
    print("combo,region,axis,p50_m,p90_m,p95_m,fix_availability,solution_rate")
    for label, cs in stats.combos.items():
        for reg in (r.value for r in REGIONS):
            for axis in AXES:
                p = cs.percentiles[reg][axis]
                cells = ["" if p[k] is None else f"{p[k]:.6g}" for k in (50, 90, 95)]
                rates = ["" if r is None else f"{r:.6g}" for r in (cs.fix_availability[reg], cs.solution_rate[reg])]
                print(",".join([label, reg, axis, *cells, *rates]))


def _simulate_and_emit(cfg, combos, args) -> int:
    run = simulate(cfg, combos, workers=args.workers)
    stats = summarize(run)
    paths = emit_outputs(run.records, stats, args.out, cfg.echo())
    if not args.no_figures:
        from .experiment.plots import render_report
        paths += render_report(run, stats, args.out)
    _print_table(stats)
    log.info("wrote %d files to %s", len(paths), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "los-table":
            print("d2d_m,p_los")
            for d in np.arange(0.0, args.max_d + args.step / 2, args.step):
                print(f"{d:.6g},{gnb_los_probability(d):.6f}")
            return EXIT_OK
        if args.command == "gen-trajectory":
            write_trajectory(synthetic_drive(args.rate_hz), args.out)
            return EXIT_OK
        cfg = _apply_overrides(load_scenario(args.scenario), args)
        if args.command == "run":
            combo = parse_combo(args.systems) if args.systems else cfg.systems
            return _simulate_and_emit(cfg, (combo,), args)
        combos = parse_combos(args.combos) if args.combos else cfg.combos
        return _simulate_and_emit(cfg, combos, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (VhetposError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
