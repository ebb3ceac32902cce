"""Ordinal probit sampler.

Each sweep draws (δ, z) | y, β as a block (δ by random-walk Metropolis
marginally of z, then z from truncated normals) followed by the
conjugate update β | z.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import (PROBIT, DrawsStore, OrdinalDataset, PriorSpec, SamplerConfig,
                   cut_bounds)
from .cutpoints import (IotaTuner, ProposalCache, draw_delta_mh as _draw_delta_mh,
                        delta_mode_and_hessian as _mode_and_hessian, initial_delta)
from .errors import ChainError


def delta_mode_and_hessian(data: OrdinalDataset, beta, priors: PriorSpec | None = None, **kwargs):
    """(δ̂, D̂) for the probit likelihood at fixed β. ``priors`` is unused."""
    return _mode_and_hessian(data, beta, PROBIT, **kwargs)


def draw_delta_mh(data, beta, delta, iota, d_hat, priors, rng, step=None):
    return _draw_delta_mh(data, beta, delta, iota, d_hat, priors, rng, PROBIT, step=step)


def draw_latent_z(data: OrdinalDataset, beta, gamma, rng, eta=None) -> np.ndarray:
    """z_i ~ N(x_i'β, 1) truncated to (γ_{y_i−1}, γ_{y_i})."""
    if eta is None:
        eta = data.X @ np.asarray(beta, dtype=float)
    bounds = np.concatenate(([-np.inf], np.asarray(gamma, dtype=float), [np.inf]))
    return kernels.sample_truncated_normal(eta, 1.0, bounds[data.y - 1], bounds[data.y], rng)


def beta_conditional_probit(X, z, priors: PriorSpec, xtx=None):
    """Mean β̃ and covariance B̃ of β | z, with B̃⁻¹ = B₀⁻¹ + X'X."""
    X = np.asarray(X, dtype=float)
    if xtx is None:
        xtx = X.T @ X
    prec = priors.beta_precision + xtx
    cov = kernels.spd_inverse(prec, "draw_beta_probit")
    cov = 0.5 * (cov + cov.T)
    mean = cov @ (priors.beta_precision @ priors.beta_mean + X.T @ np.asarray(z, dtype=float))
    return mean, cov


def draw_beta_probit(data: OrdinalDataset, z, priors: PriorSpec, rng, xtx=None):
    mean, cov = beta_conditional_probit(data.X, z, priors, xtx)
    return kernels.sample_mvn(mean, cov, rng, source="draw_beta_probit")


def probit_sweep(data: OrdinalDataset, beta, delta, priors: PriorSpec, rng, iota, d_hat,
                 xtx=None, lik=None, eta=None):
    """One sweep: δ | y, β by Metropolis, z | y, β, δ, then β | z.

    Returns ``(beta, delta, accepted, z)``.
    """
    if eta is None:
        eta = data.X @ beta
    accepted = True
    if delta.size:
        delta, accepted = _draw_delta_mh(data, beta, delta, iota, d_hat, priors, rng,
                                         PROBIT, eta=eta, lik=lik)
    bounds = cut_bounds(delta)
    z = kernels.sample_truncated_normal(eta, 1.0, bounds[data.y - 1], bounds[data.y], rng)
    beta = draw_beta_probit(data, z, priors, rng, xtx=xtx)
    return beta, delta, accepted, z


def run_probit_chain(data: OrdinalDataset, priors: PriorSpec, config: SamplerConfig,
                     rng=None) -> DrawsStore:
    """Run one chain; keeps the ``config.retained`` post burn-in draws.

    Start: β = 0 and δ from the empirical category shares. ι is tuned
    during burn-in when ``config.adapt_iota`` is set.
    """
    priors.check(data)
    if rng is None:
        rng = kernels.make_rng(config.seed)
    X = data.X
    xtx = X.T @ X
    k, d = data.k, data.J - 2

    beta = np.zeros(k)
    delta = initial_delta(data, PROBIT)
    tuner = IotaTuner(config.iota, config.target_acceptance, config.adapt_iota)
    proposals = ProposalCache(data, PROBIT, config.refresh)

    keep = config.retained
    beta_out = np.empty((keep, k))
    delta_out = np.empty((keep, d))
    accepted_kept = 0

    for sweep in range(config.iterations):
        if sweep == config.burn_in:
            tuner.freeze()
            proposals.end_burn_in()
        eta = X @ beta
        d_hat = None
        if d:
            try:
                _, d_hat = proposals.get(beta, eta=eta)
            except Exception as exc:
                raise ChainError(f"cut-point proposal failed at sweep {sweep}: {exc}",
                                 {"sweep": sweep, "beta": beta, "delta": delta}) from exc
        beta, delta, accepted, _ = probit_sweep(data, beta, delta, priors, rng, tuner.iota,
                                                d_hat, xtx=xtx, lik=proposals.lik, eta=eta)
        if d:
            tuner.update(accepted)
        if not np.all(np.isfinite(beta)):
            raise ChainError(f"non-finite beta at sweep {sweep}",
                             {"sweep": sweep, "beta": beta, "delta": delta})
        if sweep >= config.burn_in:
            row = sweep - config.burn_in
            beta_out[row] = beta
            delta_out[row] = delta
            accepted_kept += bool(accepted) if d else 0

    return DrawsStore(beta_out, delta_out, accepted_kept if d else keep, PROBIT,
                      data.covariate_names, tuner.iota, data.fingerprint(),
                      proposals.cov if proposals.frozen else None)
