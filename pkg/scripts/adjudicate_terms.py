"""Compare candidate closed forms of the two index-heavy moment terms against simulation.

For E[C2^2] and E[C1 C2] two forms are evaluated: the one implemented in
``irsopt.moments`` and the competing variant (K_sr in place of K_rd in one
denominator and sigma^4 in place of mu^4 in the s2^2 term for E[C2^2]; the
M(N+1) bracket for E[C1 C2]). Prints z-scores against per-term Monte Carlo.

    python3 scripts/adjudicate_terms.py [--samples 400000]
"""
import argparse

import numpy as np

from irsopt.experiments import Scenario
from irsopt.moments import PhaseVector, moment_terms, phase_sums
from irsopt.montecarlo import term_estimates

CASES = [
    ("M=4 N=20 K=5/10/20", Scenario(M=4, N=20)),
    ("M=2 N=6 K=1/2/0.5", Scenario(M=2, N=6, rice={"sd": 1.0, "sr": 2.0, "rd": 0.5})),
    ("M=3 N=5 K=2/0.7/3", Scenario(M=3, N=5, rice={"sd": 2.0, "sr": 0.7, "rd": 3.0})),
]


def variant_terms(cfg, p):
    s = phase_sums(p)
    M, N = cfg.M, cfg.N
    ms, mr = cfg.sr.mean, cfg.rd.mean
    vs, vr = cfg.sr.variance, cfg.rd.variance
    Ps, Pr = cfg.sr.power, cfg.rd.power
    Ks, Kr = cfg.sr.rice_factor, cfg.rd.rice_factor
    c2sq = (
        M * N * (N - 1) * vs**2 * Pr**2 * (1 + 2 * Ks / (Ks + 1) ** 2 + M * Ks**2 / (Kr + 1) ** 2)
        + M * vs * ms**2 * Pr * mr**2 * (s.s3 + s.s4) * (1 + M * Ks / (Kr + 1))
        + M**2 * vs**2 * vr**2 * s.s2**2
    )
    c1c2 = M * Ps * ms**2 * Pr * mr**2 * s.s2 * (M * (N + 1) + 1 / (Kr + 1) + 1 / (Ks + 1) + 1 / ((Ks + 1) * (Kr + 1)))
    return {"EC2sq": c2sq, "EC1C2": c1c2}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=400_000)
    args = ap.parse_args()
    rng = np.random.default_rng(1)
    for label, scen in CASES:
        cfg = scen.system()
        p = PhaseVector.continuous(rng.uniform(0, 2 * np.pi, cfg.N))
        est = term_estimates(cfg, p, args.samples, 7)
        ours = moment_terms(cfg, p).as_dict()
        other = variant_terms(cfg, p)
        print(label)
        for name in ("EC2sq", "EC1C2"):
            mean, se = est[name]
            z_ours = abs(ours[name] - mean) / se
            z_other = abs(other[name] - mean) / se
            print(f"  {name:6s} mc={mean:.6g}  implemented z={z_ours:6.2f}  variant z={z_other:8.2f}")


if __name__ == "__main__":
    main()
