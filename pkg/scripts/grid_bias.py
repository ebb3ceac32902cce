"""Compare sampler output with quadrature on a one-parameter, three-category
model, for both δ targets of the quantile sampler and for the probit sampler.

Repeats the run over several seeds and prints the mean error in the
posterior means with its Monte-Carlo standard error, plus the evidence error.

    python scripts/grid_bias.py --seeds 8 --iters 22000
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from bayesord import (ModelKind, PriorSpec, SamplerConfig, log_marginal_likelihood,
                      run_probit_chain, run_quantile_chain, simulate_dataset)
from bayesord.core import PROBIT

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from oracles import quadrature_posterior  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--iters", type=int, default=22_000)
    ap.add_argument("--burnin", type=int, default=2_000)
    ap.add_argument("--p", type=float, default=0.5)
    args = ap.parse_args()

    cases = [("probit", PROBIT, "marginal", 0),
             (f"quantile p={args.p} marginal", ModelKind.quantile(args.p), "marginal", 3),
             (f"quantile p={args.p} conditional", ModelKind.quantile(args.p), "conditional", 3)]
    priors = PriorSpec.default(1, 3)
    for label, kind, target, data_seed in cases:
        data = simulate_dataset([0.3], [0.0, 0.8], 30, kind, seed=data_seed)
        qb, qd, qz = quadrature_posterior(data.y, 3, kind.p)
        errs = []
        for s in range(args.seeds):
            cfg = SamplerConfig(args.iters, args.burnin, seed=100 + s, p=kind.p,
                                refresh="burn_in", delta_target=target)
            run = run_probit_chain if kind.p is None else run_quantile_chain
            draws = run(data, priors, cfg)
            ev = log_marginal_likelihood(data, priors, cfg, kind, draws=draws)
            errs.append((draws.beta_draws.mean() - qb, draws.delta_draws.mean() - qd,
                         ev.log_marginal_likelihood - qz))
        e = np.array(errs)
        se = e.std(axis=0, ddof=1) / np.sqrt(len(e))
        print(f"{label:>32}: dbeta {e[:, 0].mean():+.4f} ({se[0]:.4f})  "
              f"ddelta {e[:, 1].mean():+.4f} ({se[1]:.4f})  dlnML {e[:, 2].mean():+.4f} ({se[2]:.4f})")


if __name__ == "__main__":
    main()
