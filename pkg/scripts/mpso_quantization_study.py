"""Median optimized OP over seeds for MPSO at several bit depths and spreads, plus PSO.

    python3 scripts/mpso_quantization_study.py [--seeds 10] [--spread 0.2 0.5]
"""
import argparse

import numpy as np

from irsopt.experiments import Scenario
from irsopt.optimizers import OptimizerSettings, build_op_objective, mpso_optimize, pso_optimize


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--bits", type=int, nargs="+", default=[1, 2, 3, 5])
    ap.add_argument("--spread", type=float, nargs="+", default=[0.2])
    ap.add_argument("--N", type=int, default=40)
    args = ap.parse_args()
    scen = Scenario(M=4, N=args.N, snr_db=73.0, gamma_th_db=0.0)
    obj = build_op_objective(scen.system(), scen.gamma_th)
    zero = obj(np.zeros(args.N))
    print(f"all-zero phases: OP={zero:.6g}")
    for spread in args.spread:
        for b in args.bits:
            vals = [
                mpso_optimize(obj, args.N, b, OptimizerSettings(seed=s, mpso_spread=spread)).value
                for s in range(args.seeds)
            ]
            print(f"mpso spread={spread} b={b}: median OP={np.median(vals):.6g}  best={min(vals):.6g}")
    vals = [pso_optimize(obj, args.N, OptimizerSettings(seed=s)).value for s in range(args.seeds)]
    print(f"pso: median OP={np.median(vals):.6g}")


if __name__ == "__main__":
    main()
