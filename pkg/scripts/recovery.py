"""Simulation-based recovery: fit probit and quantile models to synthetic data
with known coefficients and report z-scores of the posterior means.

    python scripts/recovery.py --n 10000 --iters 12500 --burnin 2500
"""

import argparse
import time

import numpy as np

from bayesord import (ModelKind, PriorSpec, SamplerConfig, run_probit_chain, run_quantile_chain,
                      simulate_dataset, summarize_draws)
from bayesord.core import PROBIT


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--iters", type=int, default=12_500)
    ap.add_argument("--burnin", type=int, default=2_500)
    ap.add_argument("--p", type=float, nargs="*", default=[0.2, 0.5, 0.8])
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    beta = np.array([0.5, -0.6, 0.4, 0.8, -0.3])
    gamma = np.array([0.0, 0.9, 1.8])
    for kind in [PROBIT] + [ModelKind.quantile(p) for p in args.p]:
        data = simulate_dataset(beta, gamma, args.n, kind, seed=args.seed)
        priors = PriorSpec.default(data.k, data.J)
        cfg = SamplerConfig(args.iters, args.burnin, seed=11, p=kind.p)
        start = time.perf_counter()
        run = run_probit_chain if kind.p is None else run_quantile_chain
        draws = run(data, priors, cfg)
        s = summarize_draws(draws)
        truth = np.r_[beta, np.log(np.diff(gamma))]
        z = (s.mean - truth) / s.std
        print(f"{str(kind):>14}  accept {draws.acceptance_rate:.3f}  "
              f"max|z| {np.max(np.abs(z)):.2f}  ({time.perf_counter() - start:.0f}s)")
        for name, m, sd, zz, ie in zip(s.names, s.mean, s.std, z, s.inefficiency):
            print(f"    {name:>10} {m:8.4f} ({sd:.4f})  z {zz:+.2f}  ineff {ie:.1f}")


if __name__ == "__main__":
    main()
