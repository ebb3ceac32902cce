"""Fit the quantile model over a grid of p on one dataset and print the
coefficient path with equal-tailed intervals.

    python scripts/quantile_sweep.py --data out/sim/data.csv --grid 0.1:0.9:0.1
"""

import argparse

import numpy as np

from bayesord import PriorSpec, SamplerConfig, run_quantile_chain, simulate_dataset, summarize_draws
from bayesord.core import PROBIT
from bayesord.survey import read_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", help="dataset cache csv; synthetic probit data if omitted")
    ap.add_argument("--grid", default="0.1:0.9:0.1")
    ap.add_argument("--iters", type=int, default=6_000)
    ap.add_argument("--burnin", type=int, default=1_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.data:
        data = read_dataset(args.data)
    else:
        data = simulate_dataset([0.3, 0.8, -0.5], [0.0, 0.9, 1.7], 2_000, PROBIT, seed=1)
    a, b, c = (float(v) for v in args.grid.split(":"))
    grid = np.round(np.arange(a, b + c / 2, c), 10)
    priors = PriorSpec.default(data.k, data.J)
    names = data.covariate_names
    print("p     " + "  ".join(f"{n:>22}" for n in names))
    for p in grid:
        draws = run_quantile_chain(data, priors, SamplerConfig(args.iters, args.burnin,
                                                               seed=args.seed, p=p))
        s = summarize_draws(draws)
        cells = [f"{m:7.3f} [{lo:6.3f},{hi:6.3f}]"
                 for m, lo, hi in zip(s.mean[:data.k], s.lower[:data.k], s.upper[:data.k])]
        print(f"{p:.2f}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
