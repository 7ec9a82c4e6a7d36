"""Run every preset and write plot-ready CSVs.

    python3 scripts/reproduce_figures.py --out results [--mc-samples N] [--jobs K]
"""
import argparse
import logging
from dataclasses import replace

from irsopt.cli import main as cli_main
from irsopt.experiments import preset, run_sweep, run_validate, write_sweep, write_validate

SWEEPS = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--mc-samples", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="subset of presets")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    wanted = set(args.only or ("fig1", "table2") + SWEEPS)

    if "fig1" in wanted:
        cfg = preset("fig1")
        results = run_validate(cfg)
        write_validate(args.out, cfg, results)
        for r in results:
            logging.info("fig1 N=%d KS=%.4f", r.N, r.ks)
    for name in SWEEPS:
        if name not in wanted:
            continue
        cfg = preset(name)
        if args.mc_samples:
            cfg = replace(cfg, mc=replace(cfg.mc, samples=args.mc_samples))
        path = write_sweep(args.out, cfg, run_sweep(cfg, jobs=args.jobs))
        logging.info("%s -> %s", name, path)
    if "table2" in wanted:
        cli_main(["overhead", "--out", args.out])


if __name__ == "__main__":
    main()
