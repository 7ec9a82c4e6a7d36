"""Command-line entry point: ``irsopt {validate,sweep,optimize,overhead,preset}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .channel import ConfigError
from .experiments import (
    PRESETS,
    ExperimentConfig,
    preset,
    run_optimize,
    run_overhead,
    run_sweep,
    run_validate,
    write_csv,
    write_optimize,
    write_sweep,
    write_validate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_IO = 4

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
log = logging.getLogger("irsopt")


def _setup_logging() -> None:
    name = os.environ.get("IRS_LOG_LEVEL", "warn").lower()
    level = _LEVELS.get(name)
    logging.basicConfig(level=level or logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.warning("ignoring IRS_LOG_LEVEL=%r (expected one of %s)", name, sorted(_LEVELS))


def _load_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = replace(cfg, mc=replace(cfg.mc, seed=args.seed))
    if args.mc_samples is not None:
        if args.mc_samples < 1:
            raise ConfigError("--mc-samples must be >= 1")
        cfg = replace(cfg, mc=replace(cfg.mc, samples=args.mc_samples))
    return cfg


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    results = run_validate(cfg)
    path = write_validate(args.out, cfg, results)
    for r in results:
        note = f" [{r.warning}]" if r.warning else ""
        print(f"N={r.N} KS={r.ks:.5f} n={r.n}{note}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rows = run_sweep(cfg, jobs=args.jobs)
    path = write_sweep(args.out, cfg, rows)
    print(f"wrote {path}")
    failed = [r for r in rows if r["status"] == "gate-fail"]
    for r in failed:
        log.error(
            "gate: %s=%s %s analytic=%.6g mc=%.6g se=%.3g",
            cfg.sweep.axis, r["axis_value"], r["method"], r["analytic_metric"], r["mc_metric"], r["mc_stderr"],
        )
    return EXIT_GATE if failed else EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    report = run_optimize(cfg)
    path = write_optimize(args.out, cfg, report)
    print(json.dumps(report.summary(), indent=2))
    print(f"wrote {path}")
    return EXIT_OK if report.gate else EXIT_GATE


def cmd_overhead(args) -> int:
    rows = run_overhead(args.x, args.bits, args.continuous_bits, args.N)
    out = Path(args.out) / "overhead.csv"
    write_csv(
        out,
        f"# irsopt-overhead v1 bits={args.bits} continuous_bits={args.continuous_bits}\n",
        ("x", "bits_instantaneous", "bits_statistical", "reduction_pct"),
        rows,
    )
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("x", "reduction_pct"))
    for r in rows:
        writer.writerow((r["x"], f"{r['reduction_pct']:.2f}"))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_preset(args) -> int:
    sys.stdout.write(preset(args.name).to_yaml())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsopt", description="Statistical-CSI IRS phase design experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--preset", choices=PRESETS, help="named figure preset")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--mc-samples", type=int, help="Monte Carlo sample count")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
        p.set_defaults(func=func)
        return p

    experiment("validate", cmd_validate, "gamma-fit CDF vs empirical CDF")
    experiment("sweep", cmd_sweep, "metric curves over one axis")
    experiment("optimize", cmd_optimize, "optimize phases at one scenario point")

    p = sub.add_parser("overhead", help="BS-to-IRS signalling overhead table")
    p.add_argument("--x", type=int, nargs="+", default=[10, 20, 30, 40, 50])
    p.add_argument("--bits", type=int, default=5)
    p.add_argument("--continuous-bits", type=int, default=32)
    p.add_argument("--N", type=int, default=None, help="IRS elements (counts are per element if omitted)")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_overhead)

    p = sub.add_parser("preset", help="print a preset as YAML")
    p.add_argument("name", choices=PRESETS)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        # a missing config is a config problem; a missing output parent is I/O
        if getattr(args, "config", None) and Path(exc.filename or "") == Path(args.config):
            log.error("config error: cannot read %s", exc.filename)
            return EXIT_CONFIG
        log.error("I/O error: %s: %s", exc.filename, exc.strerror)
        return EXIT_IO
    except OSError as exc:
        log.error("I/O error: %s: %s", exc.filename, exc.strerror)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
