"""Log marginal likelihood from sampler output and Bayes factors.

The basic marginal likelihood identity is evaluated at the posterior
mean (β*, δ*):

    ln m(y) = ln f(y|β*,δ*) + ln π(β*) + ln π(δ*) − ln π(δ*|y) − ln π(β*|y,δ*)

π(δ*|y) comes from the Metropolis–Hastings ordinate estimator of Chib
and Jeliazkov (2001): a ratio of two kernel averages, one over the main
run and one over a reduced run with δ fixed at δ*. The reduced run also
supplies π(β*|y,δ*) by averaging the conjugate normal density of β over
its latent-data draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .core import (CutpointLikelihood, DrawsStore, ModelKind, OrdinalDataset, PriorSpec,
                   SamplerConfig, cut_bounds, log_likelihood)
from .cutpoints import delta_mode_and_hessian
from .errors import ConvergenceError, ValidationError
from .probit import beta_conditional_probit, run_probit_chain
from .quantile import beta_conditional_quantile, initial_latent, mixture_constants, run_quantile_chain


@dataclass
class EvidenceResult:
    log_marginal_likelihood: float
    log_likelihood: float
    log_prior: float
    log_posterior_ordinate: float
    beta_star: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delta_star: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_beta_ordinate: float = 0.0
    log_delta_ordinate: float = 0.0
    main_draws: int = 0
    reduced_draws: int = 0
    fingerprint: str = ""
    model_kind: str = ""

    @classmethod
    def reported(cls, value: float, fingerprint: str, model_kind: str = ""):
        """Wrap a published ln ML value (no component breakdown)."""
        return cls(float(value), float(value), 0.0, 0.0, fingerprint=fingerprint,
                   model_kind=model_kind)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "log_marginal_likelihood", "log_likelihood", "log_prior", "log_posterior_ordinate",
            "log_beta_ordinate", "log_delta_ordinate", "main_draws", "reduced_draws",
            "fingerprint", "model_kind")}
        out["beta_star"] = np.asarray(self.beta_star).tolist()
        out["delta_star"] = np.asarray(self.delta_star).tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        d["beta_star"] = np.asarray(d.get("beta_star", []), dtype=float)
        d["delta_star"] = np.asarray(d.get("delta_star", []), dtype=float)
        return cls(**d)


def log_bayes_factor(ml_1: EvidenceResult, ml_0: EvidenceResult) -> float:
    """ln BF₁₀ = ln m₁(y) − ln m₀(y); both must come from the same dataset."""
    if ml_1.fingerprint != ml_0.fingerprint:
        raise ValidationError(
            "marginal likelihoods are only comparable across models fitted to the same "
            f"dataset (fingerprints {ml_1.fingerprint!r} and {ml_0.fingerprint!r} differ)")
    return ml_1.log_marginal_likelihood - ml_0.log_marginal_likelihood


class _Ordinate:
    """Log kernel terms for the δ-ordinate at fixed β."""

    def __init__(self, data, priors, kind, iota, frozen_cov=None):
        self.data, self.priors, self.kind, self.iota = data, priors, kind, iota
        self.lik = CutpointLikelihood(data.y, data.J, kind)
        self.frozen_cov = frozen_cov
        self.mode = None

    def proposal_cov(self, eta):
        if self.frozen_cov is not None:
            return self.frozen_cov
        self.mode, cov = delta_mode_and_hessian(self.data, None, self.kind, start=self.mode,
                                                eta=eta, lik=self.lik)
        return self.iota ** 2 * cov

    def log_post(self, eta, delta):
        try:
            return self.lik.value(eta, delta) + self.priors.log_delta(delta)
        except OverflowError:
            return -np.inf


def _reduced_run(data, priors, kind, delta_star, beta_start, count, burn_in, rng,
                 ordinate: _Ordinate, beta_star, proposals_per_draw=1):
    """Sample (β, latent) | y, δ* and collect both ordinate terms."""
    X, y = data.X, data.y
    bounds = cut_bounds(delta_star)
    lo, hi = bounds[y - 1], bounds[y]
    d = delta_star.size
    beta = np.array(beta_start, dtype=float)
    log_beta_terms = np.empty(count)
    log_den_terms = np.empty(count)

    if kind.is_quantile:
        theta, tau2 = mixture_constants(kind.p)
        w = np.ones(data.n)
        z = initial_latent(data, delta_star)
    else:
        xtx = X.T @ X

    for it in range(burn_in + count):
        if kind.is_quantile:
            mean, cov = beta_conditional_quantile(X, z, w, kind.p, priors)
            beta = kernels.sample_mvn(mean, cov, rng, source="draw_beta_quantile")
            eta = X @ beta
            w = kernels.sample_gig_half((z - eta) ** 2 / tau2, theta * theta / tau2 + 2.0, rng)
            z = kernels.sample_truncated_normal(eta + theta * w, tau2 * w, lo, hi, rng)
            # (z, w) now follow π(z, w | y, δ*); the β ordinate conditions on them
            mean, cov = beta_conditional_quantile(X, z, w, kind.p, priors)
        else:
            eta = X @ beta
            z = kernels.sample_truncated_normal(eta, 1.0, lo, hi, rng)
            mean, cov = beta_conditional_probit(X, z, priors, xtx)
            beta = kernels.sample_mvn(mean, cov, rng, source="draw_beta_probit")
        if it < burn_in:
            continue
        row = it - burn_in
        log_beta_terms[row] = kernels.mvn_logpdf(beta_star, mean, cov, "reduced run")
        if d:
            eta = X @ beta
            prop_cov = ordinate.proposal_cov(eta)
            chol = kernels.cholesky_spd(prop_cov, "reduced run")
            here = ordinate.log_post(eta, delta_star)
            # several proposals per β draw: same expectation, less variance
            log_alpha = [min(0.0, ordinate.log_post(eta, delta_star + chol @ rng.standard_normal(d))
                             - here) for _ in range(proposals_per_draw)]
            log_den_terms[row] = logsumexp(log_alpha) - np.log(proposals_per_draw)
    return log_beta_terms, log_den_terms


def log_marginal_likelihood(data: OrdinalDataset, priors: PriorSpec, config: SamplerConfig,
                            model_kind: ModelKind, draws: DrawsStore | None = None,
                            reduced_draws: int = 5_000, reduced_burn_in: int = 500,
                            ordinate_draws: int | None = None, proposals_per_draw: int = 10,
                            seed=None) -> EvidenceResult:
    """Marginal likelihood of an ordinal probit or quantile model.

    ``draws`` is the completed main run; it is generated from ``config``
    when omitted. ``ordinate_draws`` caps how many (evenly spaced) main-run
    draws enter the numerator of the δ-ordinate; all are used by default.
    ``proposals_per_draw`` is the number of proposals from δ* averaged at
    each reduced-run draw for the denominator.
    """
    fingerprint = data.fingerprint()
    if data.n == 0:
        return EvidenceResult(0.0, 0.0, 0.0, 0.0, fingerprint=fingerprint,
                              model_kind=str(model_kind))
    priors.check(data)
    if draws is None:
        if model_kind.is_quantile:
            draws = run_quantile_chain(data, priors, config, p=model_kind.p)
        else:
            draws = run_probit_chain(data, priors, config)
    if str(draws.model_kind) != str(model_kind):
        raise ValidationError(f"draws are from {draws.model_kind}, asked for {model_kind}")
    rng = kernels.make_rng(np.random.SeedSequence(config.seed if seed is None else seed)
                           .spawn(2)[1])

    beta_star = draws.beta_draws.mean(axis=0)
    delta_star = draws.delta_draws.mean(axis=0)
    d = delta_star.size
    ll = log_likelihood(data, beta_star, delta_star, model_kind)
    lprior = priors.log_beta(beta_star) + priors.log_delta(delta_star)

    frozen = getattr(draws, "proposal_cov", None)
    ordinate = _Ordinate(data, priors, model_kind, draws.iota,
                         None if frozen is None else draws.iota ** 2 * frozen)

    # Numerator of the δ-ordinate: E_post[α(δ, δ*|β) q(δ, δ*|β)].
    log_num = 0.0
    if d:
        idx = np.arange(draws.M)
        if ordinate_draws is not None and ordinate_draws < draws.M:
            idx = np.linspace(0, draws.M - 1, ordinate_draws).round().astype(int)
        terms = np.empty(idx.size)
        for t, g in enumerate(idx):
            beta_g, delta_g = draws.beta_draws[g], draws.delta_draws[g]
            eta = data.X @ beta_g
            prop_cov = ordinate.proposal_cov(eta)
            log_alpha = min(0.0, ordinate.log_post(eta, delta_star)
                            - ordinate.log_post(eta, delta_g))
            terms[t] = log_alpha + kernels.mvn_logpdf(delta_star, delta_g, prop_cov, "ordinate")
        log_num = float(logsumexp(terms) - np.log(terms.size))

    log_beta_terms, log_den_terms = _reduced_run(
        data, priors, model_kind, delta_star, beta_star, reduced_draws, reduced_burn_in, rng,
        ordinate, beta_star, proposals_per_draw)
    log_beta_ord = float(logsumexp(log_beta_terms) - np.log(reduced_draws))
    log_delta_ord = 0.0
    if d:
        log_den = float(logsumexp(log_den_terms) - np.log(reduced_draws))
        log_delta_ord = log_num - log_den
    lpo = log_beta_ord + log_delta_ord
    lml = ll + lprior - lpo
    if not np.isfinite(lml):
        raise ConvergenceError(
            f"non-finite evidence: loglik={ll}, logprior={lprior}, "
            f"beta ordinate={log_beta_ord}, delta ordinate={log_delta_ord}")
    return EvidenceResult(lml, ll, lprior, lpo, beta_star, delta_star, log_beta_ord,
                          log_delta_ord, int(draws.M), reduced_draws, fingerprint,
                          str(model_kind))
